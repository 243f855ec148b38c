#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "pdl/harness/experiments.hpp"
#include "pdl/harness/output.hpp"
#include "pdl/harness/stats.hpp"
#include "pdl/kernel/errors.hpp"
#include "pdl/kernel/stream.hpp"

using namespace pdl;
using namespace pdl::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream f(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(f, l);) out.push_back(l);
    return out;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("pdl-test-" + tag + "-" + std::to_string(::getpid()));
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string sub(const std::string& s) const { return (path / s).string(); }
};

// The env override would otherwise leak into seed resolution.
struct NoEnvSeed {
    NoEnvSeed() { ::unsetenv("PDL_MASTER_SEED"); }
};

} // namespace

TEST_CASE("linear_fit closed forms") {
    const auto f = linear_fit({0, 1, 2, 3, 4}, {1, 3, 5, 7, 9});
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));

    const auto flat = linear_fit({1, 2, 3, 4}, {5, 5, 5, 5});
    CHECK(flat.slope == doctest::Approx(0.0));
    CHECK(flat.r2 >= 0.0);
    CHECK(flat.r2 <= 1.0);

    CHECK_THROWS_AS(linear_fit({1, 1, 1}, {1, 2, 3}), ParameterError);
    CHECK_THROWS_AS(linear_fit({1}, {1}), ParameterError);
    CHECK_THROWS_AS(linear_fit({1, 2}, {1}), ParameterError);
}

TEST_CASE("linear_fit recovers a noisy slope") {
    kernel::Stream s(kernel::StreamKey(7, "fit"));
    std::vector<double> xs, ys;
    for (int i = 0; i < 10000; ++i) {
        const double x = s.uniform() * 10;
        xs.push_back(x);
        ys.push_back(x + (s.uniform() - 0.5) * 4);
    }
    const auto f = linear_fit(xs, ys);
    CHECK(std::abs(f.slope - 1.0) < 0.05);
    CHECK(f.r2 > 0.0);
    CHECK(f.r2 < 1.0);
}

TEST_CASE("slope interval uses Student t with n-2 dof") {
    // Residuals +-1 alternating: hand-computable standard error.
    std::vector<double> xs, ys;
    for (int i = 0; i < 10; ++i) {
        xs.push_back(i);
        ys.push_back(3 * i + (i % 2 ? 1.0 : -1.0));
    }
    const auto f = linear_fit(xs, ys);
    const auto ci = f.slope_ci(0.95);
    const double t8 = 2.306004135204166;  // t_{0.975, 8}
    CHECK((ci.second - ci.first) / 2 == doctest::Approx(t8 * f.se_slope).epsilon(1e-9));
}

TEST_CASE("tv_distance examples") {
    const Distribution p{{"a", 0.5}, {"b", 0.5}};
    const Distribution q{{"a", 0.75}, {"b", 0.25}};
    CHECK(tv_distance(p, p) == 0.0);
    CHECK(tv_distance(p, q) == doctest::Approx(0.25));
    CHECK(tv_distance(p, Distribution{{"c", 1.0}}) == doctest::Approx(1.0));
    CHECK(tv_distance(std::vector<double>{0.5, 0.5}, std::vector<double>{0.75, 0.25}) == doctest::Approx(0.25));
    CHECK_THROWS_AS(tv_distance(p, Distribution{{"a", 0.7}}), ParameterError);
    CHECK_THROWS_AS(tv_distance(Distribution{{"a", -0.5}, {"b", 1.5}}, p), ParameterError);
}

TEST_CASE("binomial_ci is the Wilson interval") {
    const auto a = binomial_ci(0, 20);
    CHECK(a.lo == 0.0);
    CHECK(a.hi > 0.0);
    const auto b = binomial_ci(20, 20);
    CHECK(b.hi == 1.0);
    CHECK(b.lo < 1.0);

    // Independent evaluation with the tabulated z_{0.975}.
    const double z = 1.959963984540054, n = 100, p = 0.5;
    const double d = 1 + z * z / n;
    const double c = (p + z * z / (2 * n)) / d;
    const double h = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / d;
    const auto w = binomial_ci(50, 100);
    CHECK(w.lo == doctest::Approx(c - h).epsilon(1e-12));
    CHECK(w.hi == doctest::Approx(c + h).epsilon(1e-12));
    CHECK(std::abs(w.lo - 0.404) < 0.005);
    CHECK(std::abs(w.hi - 0.596) < 0.005);

    CHECK_THROWS_AS(binomial_ci(3, 2), ParameterError);
    CHECK_THROWS_AS(binomial_ci(0, 0), ParameterError);
    CHECK_THROWS_AS(binomial_ci(1, 2, 1.5), ParameterError);
}

TEST_CASE("quantiles and tails") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(normal_quantile(0.995) == doctest::Approx(2.5758293035489004).epsilon(1e-12));
    // chi2 with 2 dof has survival exp(-x/2).
    for (double x : {0.5, 3.0, 9.21})
        CHECK(chi2_sf(x, 2) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-12));
}

TEST_CASE("mean_ci") {
    const auto m = mean_ci({1, 2, 3, 4, 5});
    CHECK(m.mean == doctest::Approx(3.0));
    CHECK(m.se == doctest::Approx(std::sqrt(2.5 / 5)));
    CHECK(m.hi - m.mean == doctest::Approx(1.959963984540054 * m.se));
    CHECK_THROWS_AS(mean_ci({}), InsufficientData);
}

TEST_CASE("csv quoting round-trips") {
    const Row row{"plain", "a,b", "say \"hi\"", ""};
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) line += (i ? "," : "") + csv_escape(row[i]);
    CHECK(line == "plain,\"a,b\",\"say \"\"hi\"\"\",");
    CHECK(csv_split(line) == row);
    CHECK(fmt(0.1) == "0.1");
    CHECK(fmt(true) == "1");
    CHECK(hex64(255) == "00000000000000ff");
}

TEST_CASE("csv writer rejects ragged rows") {
    TempDir d("csv");
    fs::create_directories(d.path);
    CsvWriter w(d.sub("x.csv"), {"a", "b"});
    w.write({"1", "2"});
    CHECK_THROWS(w.write({"1"}));
    w.flush();
    CHECK(lines(d.sub("x.csv")) == std::vector<std::string>{"a,b", "1,2"});
}

TEST_CASE("config validation") {
    NoEnvSeed guard;
    ExperimentConfig c("arw-phase");
    CHECK_THROWS_AS(ExperimentConfig("no-such"), ParameterError);
    CHECK_THROWS_AS(c.set("bogus", "1"), ParameterError);
    CHECK_THROWS_AS(c.set("N", "32,x"), ParameterError);
    CHECK_THROWS_AS(c.set("lambda", "fast"), ParameterError);
    CHECK_THROWS_AS(c.set("reps", "-1"), ParameterError);
    CHECK_THROWS_AS(c.set_threads(0), ParameterError);
    c.set("N", "32, 64");
    CHECK(c.get_int_list("N") == std::vector<long>{32, 64});
    c.set("step_cap", "1e6");
    CHECK(c.get_int("step_cap") == 1000000);
    CHECK_THROWS_AS(c.set("step_cap", "1.5"), ParameterError);
    CHECK(c.resolve_seed().source == "default");
}

TEST_CASE("config file sections and seed precedence") {
    NoEnvSeed guard;
    TempDir d("ini");
    fs::create_directories(d.path);
    const auto path = d.sub("run.ini");
    {
        std::ofstream f(path);
        f << "seed = 11\nreps = 3\n[arw-phase]\nN = 32\nzeta = 0.2\n[cp-edge]\nt_max = 10\n";
    }
    ExperimentConfig c("arw-phase");
    c.load_file(path);
    CHECK(c.reps() == 3);
    CHECK(c.get_int_list("N") == std::vector<long>{32});
    CHECK(c.resolve_seed().seed == 11);
    CHECK(c.resolve_seed().source == "config");

    ::setenv("PDL_MASTER_SEED", "22", 1);
    CHECK(c.resolve_seed().seed == 22);
    c.set_cli_seed(33);
    CHECK(c.resolve_seed().seed == 33);
    CHECK(c.resolve_seed().source == "cli");
    ::unsetenv("PDL_MASTER_SEED");

    for (const char* bad : {"colour = red\n", "[arw-phase]\nbogus = 1\n", "[cp-edge]\nN = 3\n", "[nope]\na = 1\n",
                            "[cp-edge]\nt_max = soon\n"}) {
        std::ofstream(path) << bad;
        ExperimentConfig e("arw-phase");
        CHECK_THROWS_AS(e.load_file(path), ParameterError);
    }
}

TEST_CASE("config hash ignores seed, threads and out") {
    ExperimentConfig a("bp-yaglom"), b("bp-yaglom");
    a.set_cli_seed(1);
    a.set_threads(4);
    a.set_out("elsewhere");
    CHECK(a.hash() == b.hash());
    b.set("t", "3");
    CHECK(a.hash() != b.hash());
}

TEST_CASE("ordered_map emits in index order") {
    for (std::size_t threads : {1, 3}) {
        std::vector<std::size_t> seen;
        ordered_map<std::size_t>(
            50, threads, [](std::size_t i) { return i * i; },
            [&](std::size_t i, std::optional<std::size_t> r, const std::string& err) {
                CHECK(err.empty());
                CHECK(*r == i * i);
                seen.push_back(i);
            });
        REQUIRE(seen.size() == 50);
        for (std::size_t i = 0; i < 50; ++i) CHECK(seen[i] == i);
    }
}

TEST_CASE("ordered_map reports task errors and propagates emit errors") {
    std::vector<std::string> errs;
    ordered_map<int>(
        5, 2,
        [](std::size_t i) {
            if (i == 2) throw ParameterError("boom");
            return static_cast<int>(i);
        },
        [&](std::size_t, std::optional<int> r, const std::string& err) { errs.push_back(r ? "" : err); });
    CHECK(errs == std::vector<std::string>{"", "", "boom", "", ""});

    std::atomic<int> ran{0};
    CHECK_THROWS_AS(ordered_map<int>(
                        1000, 3,
                        [&](std::size_t i) {
                            ++ran;
                            return static_cast<int>(i);
                        },
                        [&](std::size_t i, std::optional<int>, const std::string&) {
                            if (i == 3) throw std::runtime_error("stop");
                        }),
                    std::runtime_error);
    CHECK(ran < 1000);
}

TEST_CASE("reps = 0 writes header-only CSVs and a manifest") {
    NoEnvSeed guard;
    TempDir d("zero");
    for (const auto& info : experiments()) {
        ExperimentConfig c(info.name);
        c.set_reps(0);
        c.set_out(d.sub(info.name));
        const auto sum = run_experiment(c);
        CHECK(sum.rows == 0);
        CHECK(sum.failed_rows == 0);
        REQUIRE(!sum.files.empty());
        for (const auto& [name, rows] : sum.files) {
            const auto ls = lines(fs::path(c.out()) / name);
            CHECK(ls.size() == 1);
            CHECK(ls[0].find("seed,config_hash,status") != std::string::npos);
        }
        const auto j = nlohmann::json::parse(slurp(fs::path(c.out()) / "manifest.json"));
        CHECK(j["experiment"] == info.name);
        CHECK(j["status"] == "ok");
        CHECK(j["config_hash"] == hex64(c.hash()));
    }
}

TEST_CASE("invalid configs fail before anything is written") {
    TempDir d("invalid");
    ExperimentConfig c("arw-phase");
    c.set("driver", "carpet");
    c.set("N", "30");
    c.set_out(d.sub("out"));
    CHECK_THROWS_AS(run_experiment(c), ParameterError);
    CHECK(!fs::exists(d.sub("out")));

    ExperimentConfig y("bp-yaglom");
    y.set("offspring", "0:0.2,2:0.8");
    y.set_out(d.sub("out"));
    CHECK_THROWS_AS(run_experiment(y), ParameterError);
    CHECK(!fs::exists(d.sub("out")));

    ExperimentConfig e("cp-edge");
    e.set("width", "10,20");
    e.set_out(d.sub("out"));
    CHECK_THROWS_AS(run_experiment(e), ParameterError);
    CHECK(!fs::exists(d.sub("out")));
}

TEST_CASE("arw-phase row accounting and the empty density") {
    NoEnvSeed guard;
    TempDir d("phase");
    ExperimentConfig c("arw-phase");
    c.set("N", "32,64");
    c.set("zeta", "0,0.2");
    c.set_reps(5);
    c.set_out(d.sub("o"));
    const auto sum = run_experiment(c);
    CHECK(sum.failed_rows == 0);
    const auto ls = lines(d.path / "o" / "arw-phase.csv");
    REQUIRE(ls.size() == 1 + 4 * 5);
    const auto header = csv_split(ls[0]);
    const auto col = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    };
    for (std::size_t i = 1; i < ls.size(); ++i) {
        const auto r = csv_split(ls[i]);
        CHECK(r[col("seed")] == "0");
        CHECK(r[col("config_hash")] == hex64(c.hash()));
        CHECK(r[col("status")] == "ok");
        if (r[col("zeta")] == "0") CHECK(r[col("jumps")] == "0");
    }
    CHECK(lines(d.path / "o" / "arw-phase-summary.csv").size() == 1 + 4);
    CHECK(lines(d.path / "o" / "arw-phase-fits.csv").size() == 1 + 4);
}

TEST_CASE("reruns are byte-identical and thread-count independent") {
    NoEnvSeed guard;
    TempDir d("repro");
    const std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> cases{
        {"arw-stabilize", {{"N", "8,12"}, {"zeta", "0.5"}}},
        {"arw-carpet", {{"N", "32"}, {"zeta", "0.8"}}},
        {"cp-survival", {{"lambda_i", "2"}, {"lambda_e", "1,2"}, {"t_max", "3"}}},
        {"cp-edge", {{"lambda", "1,2.5"}, {"width", "40"}, {"t_max", "6"}}},
        {"cp-cylinder", {{"times", "2,4"}, {"width", "20"}, {"gap", "5"}, {"bootstrap", "20"}}},
        {"bp-yaglom", {{"t", "2"}}},
        {"bp-qprocess", {{"horizon", "20"}}},
        {"bp-gevent", {{"times", "1,2"}}},
        {"brw-yaglom", {{"t", "1"}}},
        {"tree-qsd", {{"t", "1"}}},
    };
    for (const auto& [name, params] : cases) {
        CAPTURE(name);
        std::vector<std::string> outs, manifests;
        for (int run = 0; run < 3; ++run) {
            ExperimentConfig c(name);
            for (const auto& [k, v] : params) c.set(k, v);
            c.set_reps(name == "bp-qprocess" ? 3 : 40);
            c.set_cli_seed(2024);
            c.set_threads(run == 2 ? 3 : 1);
            c.set_out(d.sub(name + std::to_string(run)));
            const auto sum = run_experiment(c);
            CHECK(sum.failed_rows == 0);
            CHECK(sum.rows > 0);
            std::string all;
            for (const auto& [file, rows] : sum.files) all += file + "\n" + slurp(fs::path(c.out()) / file);
            outs.push_back(all);
            if (run < 2) manifests.push_back(slurp(fs::path(c.out()) / "manifest.json"));
        }
        CHECK(outs[0] == outs[1]);
        CHECK(outs[0] == outs[2]);
        CHECK(manifests[0] == manifests[1]);
    }
}

TEST_CASE("failed tasks are flagged in the status column") {
    NoEnvSeed guard;
    TempDir d("partial");
    ExperimentConfig c("bp-yaglom");
    c.set("t", "200");
    c.set_reps(20);
    c.set_out(d.sub("o"));
    const auto sum = run_experiment(c);
    // At t = 200 every run dies, so the summary row is an error row.
    CHECK(sum.failed_rows == 1);
    const auto ls = lines(d.path / "o" / "bp-yaglom-summary.csv");
    REQUIRE(ls.size() == 2);
    CHECK(ls[1].find("error: no surviving runs") != std::string::npos);
    const auto j = nlohmann::json::parse(slurp(d.path / "o" / "manifest.json"));
    CHECK(j["status"] == "partial");
}
