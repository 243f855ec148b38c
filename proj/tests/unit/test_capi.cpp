// Links only the shared library; exercises the exported C surface.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "pdl/pdl.h"

TEST_CASE("experiment table") {
    REQUIRE(pdl_experiment_count() == 11);
    CHECK(std::string(pdl_experiment_name(0)) == "arw-stabilize");
    CHECK(pdl_experiment_name(11) == nullptr);
    CHECK(std::string(pdl_version()).size() > 0);
}

TEST_CASE("errors map to status codes") {
    pdl_experiment* e = nullptr;
    CHECK(pdl_experiment_create("nope", &e) == PDL_ERR_PARAM);
    CHECK(e == nullptr);
    CHECK(std::string(pdl_last_error()).find("nope") != std::string::npos);
    CHECK(pdl_experiment_create(nullptr, &e) == PDL_ERR_PARAM);

    REQUIRE(pdl_experiment_create("bp-yaglom", &e) == PDL_OK);
    CHECK(pdl_experiment_set(e, "bogus", "1") == PDL_ERR_PARAM);
    CHECK(pdl_experiment_set(e, "t", "x") == PDL_ERR_PARAM);
    CHECK(pdl_experiment_set_threads(e, 0) == PDL_ERR_PARAM);
    CHECK(pdl_experiment_load_config(e, "/nonexistent/file.ini") == PDL_ERR_PARAM);
    CHECK(pdl_experiment_set(e, "offspring", "0:0.1,2:0.9") == PDL_OK);
    CHECK(pdl_experiment_run(e, nullptr) == PDL_ERR_PARAM);
    pdl_experiment_destroy(e);
    CHECK(std::string(pdl_status_string(PDL_PARTIAL)) == "partial failure");
}

TEST_CASE("run through the C surface") {
    ::unsetenv("PDL_MASTER_SEED");
    const auto dir = std::filesystem::temp_directory_path() / ("pdl-capi-" + std::to_string(::getpid()));
    pdl_experiment* e = nullptr;
    REQUIRE(pdl_experiment_create("bp-yaglom", &e) == PDL_OK);
    CHECK(pdl_experiment_set(e, "t", "1") == PDL_OK);
    CHECK(pdl_experiment_set_reps(e, 100) == PDL_OK);
    CHECK(pdl_experiment_set_seed(e, 5) == PDL_OK);
    CHECK(pdl_experiment_set_out(e, dir.c_str()) == PDL_OK);
    pdl_run_summary s{};
    CHECK(pdl_experiment_run(e, &s) == PDL_OK);
    CHECK(s.seed == 5);
    CHECK(s.failed_rows == 0);
    CHECK(s.rows > 0);
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    pdl_experiment_destroy(e);
    std::filesystem::remove_all(dir);
}

TEST_CASE("qsd through the C surface") {
    double alpha = 0, nu[5] = {};
    CHECK(pdl_qsd("0:2/3,2:1/3", 1.0, 200, 1e-12, &alpha, nu, 5) == PDL_OK);
    CHECK(std::abs(alpha - 1.0 / 3) < 1e-6);
    for (int j = 0; j < 5; ++j) CHECK(std::abs(nu[j] - std::ldexp(1.0, -(j + 1))) < 1e-6);
    CHECK(pdl_qsd("0:0.2,2:0.8", 1.0, 200, 1e-10, &alpha, nu, 5) == PDL_ERR_PARAM);
}
