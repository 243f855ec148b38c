// Command-line front end over the C API.
#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "pdl/pdl.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitValidation = 2;
constexpr int kExitPartial = 3;

struct RunArgs {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    std::uint64_t reps = 0;
    std::size_t threads = 0;
    std::vector<std::string> sets;
};

int report(pdl_status s) {
    std::fprintf(stderr, "pdl: %s: %s\n", pdl_status_string(s), pdl_last_error());
    return s == PDL_ERR_PARAM ? kExitValidation : kExitError;
}

int run(const std::string& name, const RunArgs& a, const CLI::App& sub) {
    pdl_experiment* raw = nullptr;
    if (auto s = pdl_experiment_create(name.c_str(), &raw); s != PDL_OK) return report(s);
    std::unique_ptr<pdl_experiment, void (*)(pdl_experiment*)> exp(raw, pdl_experiment_destroy);

    pdl_status s = PDL_OK;
    if (!a.config.empty() && (s = pdl_experiment_load_config(exp.get(), a.config.c_str())) != PDL_OK) return report(s);
    for (const auto& kv : a.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "pdl: --set expects key=value, got '%s'\n", kv.c_str());
            return kExitValidation;
        }
        const auto key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if ((s = pdl_experiment_set(exp.get(), key.c_str(), value.c_str())) != PDL_OK) return report(s);
    }
    // Command-line flags override the config file.
    if (sub.count("--seed")) pdl_experiment_set_seed(exp.get(), a.seed);
    if (sub.count("--reps")) pdl_experiment_set_reps(exp.get(), a.reps);
    if (sub.count("--threads") && (s = pdl_experiment_set_threads(exp.get(), a.threads)) != PDL_OK) return report(s);
    if (sub.count("--out")) pdl_experiment_set_out(exp.get(), a.out.c_str());

    pdl_run_summary sum{};
    s = pdl_experiment_run(exp.get(), &sum);
    if (s != PDL_OK && s != PDL_PARTIAL) return report(s);
    std::printf("%s: %llu rows, %llu failed, seed %llu, config %016llx\n", name.c_str(),
                static_cast<unsigned long long>(sum.rows), static_cast<unsigned long long>(sum.failed_rows),
                static_cast<unsigned long long>(sum.seed), static_cast<unsigned long long>(sum.config_hash));
    if (s == PDL_PARTIAL) {
        std::fprintf(stderr, "pdl: %s\n", pdl_last_error());
        return kExitPartial;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interacting particle system experiments"};
    app.set_version_flag("--version", std::string(pdl_version()));
    app.require_subcommand(1);

    auto* list = app.add_subcommand("list", "List experiments");

    RunArgs args;
    std::vector<std::pair<std::string, CLI::App*>> subs;
    for (std::size_t i = 0; i < pdl_experiment_count(); ++i) {
        const std::string name = pdl_experiment_name(i);
        auto* sub = app.add_subcommand(name, pdl_experiment_summary(i));
        sub->footer(std::string("Parameters (--set key=value or the [") + name + "] config section):\n" +
                    pdl_experiment_parameters(i));
        sub->add_option("--config", args.config, "INI config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", args.seed, "Master seed (overrides PDL_MASTER_SEED and the config)");
        sub->add_option("--out", args.out, "Output directory");
        sub->add_option("--reps", args.reps, "Replicas per grid cell");
        sub->add_option("--threads", args.threads, "Worker threads");
        sub->add_option("--set", args.sets, "Parameter override key=value (repeatable)");
        subs.emplace_back(name, sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }

    if (*list) {
        for (std::size_t i = 0; i < pdl_experiment_count(); ++i)
            std::printf("%-14s %s\n", pdl_experiment_name(i), pdl_experiment_summary(i));
        return kExitOk;
    }
    for (const auto& [name, sub] : subs)
        if (*sub) return run(name, args, *sub);
    return kExitValidation;
}
