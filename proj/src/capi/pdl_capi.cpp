#include "pdl/pdl.h"

#include <memory>
#include <string>
#include <vector>

#include "pdl/branching/spectral.hpp"
#include "pdl/harness/experiments.hpp"
#include "pdl/kernel/errors.hpp"

struct pdl_experiment {
    pdl::harness::ExperimentConfig cfg;
};

namespace {

thread_local std::string last_error;

pdl_status fail(pdl_status s, const std::string& msg) {
    last_error = msg;
    return s;
}

// Runs f and maps exceptions to status codes.
template <class F>
pdl_status guarded(F&& f) {
    try {
        last_error.clear();
        return f();
    } catch (const pdl::ParameterError& e) {
        return fail(PDL_ERR_PARAM, e.what());
    } catch (const pdl::ConvergenceError& e) {
        return fail(PDL_ERR_CONVERGENCE, e.what());
    } catch (const pdl::InsufficientData& e) {
        return fail(PDL_ERR_INSUFFICIENT, e.what());
    } catch (const pdl::InvariantViolation& e) {
        return fail(PDL_ERR_INVARIANT, std::string(e.what()) + "\n" + e.dump());
    } catch (const pdl::AbsorbedError& e) {
        return fail(PDL_ERR_ABSORBED, e.what());
    } catch (const pdl::TruncationError& e) {
        return fail(PDL_ERR_TRUNCATION, e.what());
    } catch (const pdl::UndefinedView& e) {
        return fail(PDL_ERR_UNDEFINED, e.what());
    } catch (const pdl::NoWalker& e) {
        return fail(PDL_ERR_NOWALKER, e.what());
    } catch (const pdl::IllegalToppling& e) {
        return fail(PDL_ERR_ILLEGAL, e.what());
    } catch (const pdl::Error& e) {
        return fail(PDL_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(PDL_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(PDL_ERR_INTERNAL, "unknown exception");
    }
}

const char* type_name(pdl::harness::ParamType t) {
    using P = pdl::harness::ParamType;
    switch (t) {
    case P::Int: return "int";
    case P::Double: return "real";
    case P::String: return "string";
    case P::Bool: return "bool";
    case P::IntList: return "int list";
    case P::DoubleList: return "real list";
    }
    return "?";
}

pdl_status null_arg(const char* what) { return fail(PDL_ERR_PARAM, std::string(what) + " is null"); }

} // namespace

extern "C" {

const char* pdl_version(void) { return PDL_VERSION_STRING; }

const char* pdl_status_string(pdl_status status) {
    switch (status) {
    case PDL_OK: return "ok";
    case PDL_ERR_PARAM: return "parameter error";
    case PDL_ERR_IO: return "i/o error";
    case PDL_ERR_CONVERGENCE: return "convergence error";
    case PDL_ERR_INSUFFICIENT: return "insufficient data";
    case PDL_ERR_INVARIANT: return "invariant violation";
    case PDL_ERR_ABSORBED: return "absorbed";
    case PDL_ERR_TRUNCATION: return "truncation error";
    case PDL_ERR_UNDEFINED: return "undefined view";
    case PDL_ERR_NOWALKER: return "no walker";
    case PDL_ERR_ILLEGAL: return "illegal toppling";
    case PDL_PARTIAL: return "partial failure";
    case PDL_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* pdl_last_error(void) { return last_error.c_str(); }

size_t pdl_experiment_count(void) { return pdl::harness::experiments().size(); }

const char* pdl_experiment_name(size_t index) {
    const auto& e = pdl::harness::experiments();
    return index < e.size() ? e[index].name.c_str() : nullptr;
}

const char* pdl_experiment_summary(size_t index) {
    const auto& e = pdl::harness::experiments();
    return index < e.size() ? e[index].summary.c_str() : nullptr;
}

const char* pdl_experiment_parameters(size_t index) {
    static const std::vector<std::string> text = [] {
        std::vector<std::string> out;
        for (const auto& e : pdl::harness::experiments()) {
            std::string t;
            for (const auto& p : e.params)
                t += "  " + p.key + " (" + type_name(p.type) + ", default " + p.default_value + "): " + p.help + "\n";
            out.push_back(t);
        }
        return out;
    }();
    return index < text.size() ? text[index].c_str() : nullptr;
}

pdl_status pdl_experiment_create(const char* name, pdl_experiment** out) {
    if (!name) return null_arg("name");
    if (!out) return null_arg("out");
    *out = nullptr;
    return guarded([&] {
        *out = new pdl_experiment{pdl::harness::ExperimentConfig(name)};
        return PDL_OK;
    });
}

void pdl_experiment_destroy(pdl_experiment* exp) { delete exp; }

pdl_status pdl_experiment_load_config(pdl_experiment* exp, const char* path) {
    if (!exp) return null_arg("experiment");
    if (!path) return null_arg("path");
    return guarded([&] {
        exp->cfg.load_file(path);
        return PDL_OK;
    });
}

pdl_status pdl_experiment_set(pdl_experiment* exp, const char* key, const char* value) {
    if (!exp) return null_arg("experiment");
    if (!key || !value) return null_arg("key/value");
    return guarded([&] {
        exp->cfg.set(key, value);
        return PDL_OK;
    });
}

pdl_status pdl_experiment_set_seed(pdl_experiment* exp, uint64_t seed) {
    if (!exp) return null_arg("experiment");
    exp->cfg.set_cli_seed(seed);
    return PDL_OK;
}

pdl_status pdl_experiment_set_reps(pdl_experiment* exp, uint64_t reps) {
    if (!exp) return null_arg("experiment");
    exp->cfg.set_reps(reps);
    return PDL_OK;
}

pdl_status pdl_experiment_set_threads(pdl_experiment* exp, size_t threads) {
    if (!exp) return null_arg("experiment");
    return guarded([&] {
        exp->cfg.set_threads(threads);
        return PDL_OK;
    });
}

pdl_status pdl_experiment_set_out(pdl_experiment* exp, const char* dir) {
    if (!exp) return null_arg("experiment");
    if (!dir) return null_arg("dir");
    exp->cfg.set_out(dir);
    return PDL_OK;
}

pdl_status pdl_experiment_run(pdl_experiment* exp, pdl_run_summary* summary) {
    if (!exp) return null_arg("experiment");
    return guarded([&] {
        const auto s = pdl::harness::run_experiment(exp->cfg);
        if (summary) *summary = {s.rows, s.failed_rows, s.seed.seed, s.config_hash};
        if (s.failed_rows == 0) return PDL_OK;
        return fail(PDL_PARTIAL, std::to_string(s.failed_rows) + " rows failed; see the status column");
    });
}

pdl_status pdl_qsd(const char* offspring, double rate, size_t n_max, double tol, double* alpha, double* nu,
                   size_t nu_len) {
    if (!offspring) return null_arg("offspring");
    if (!alpha) return null_arg("alpha");
    if (nu_len > 0 && !nu) return null_arg("nu");
    return guarded([&] {
        pdl::branching::SpectralOptions opts;
        opts.tol = tol;
        const auto sol =
            pdl::branching::spectral_oracle(pdl::branching::OffspringDist::parse(offspring), n_max, opts, rate);
        *alpha = sol.alpha;
        for (size_t j = 0; j < nu_len; ++j) nu[j] = sol.nu_at(j + 1);
        return PDL_OK;
    });
}

} // extern "C"
