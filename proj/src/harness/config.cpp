#include "pdl/harness/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "pdl/kernel/errors.hpp"
#include "pdl/kernel/stream.hpp"

namespace pdl::harness {

namespace {

using P = ParamType;

std::vector<ExperimentInfo> build_table() {
    const ParamDef lambda{"lambda", P::Double, "1", "ARW sleep rate"};
    const ParamDef step_cap{"step_cap", P::Int, "1000000000", "toppling cap per run"};
    const ParamDef placement{"placement", P::String, "uniform", "vacancy placement: uniform | even"};
    const ParamDef offspring{"offspring", P::String, "0:2/3,2:1/3", "offspring pmf z:p,..."};
    return {
        {"arw-stabilize",
         "stabilize seeded ARW instances and record the jump count",
         {{"N", P::IntList, "16", "ring sizes"},
          {"zeta", P::DoubleList, "0.5", "densities"},
          lambda,
          {"policy", P::String, "leftmost", "leftmost | rightmost | cyclic | random"},
          step_cap,
          placement}},
        {"arw-phase",
         "mean log(1 + J) over an (N, zeta) grid with per-zeta fits",
         {{"N", P::IntList, "32,64,128,256", "ring sizes"},
          {"zeta", P::DoubleList, "0.2,0.95", "densities"},
          lambda,
          {"step_cap", P::Int, "100000000", "toppling cap per run (censored runs are flagged)"},
          {"driver", P::String, "plain", "plain | carpet"},
          {"a", P::Int, "2", "carpet block parameter"},
          {"mode_cap", P::Int, "1000000", "carpet mode cap"},
          placement}},
        {"arw-carpet",
         "carpet procedure runs with the property checker and the plain cross-check",
         {{"N", P::IntList, "32", "ring sizes, each (n+2)a^2 with n even"},
          {"a", P::Int, "2", "block parameter (even)"},
          {"zeta", P::DoubleList, "0.8", "densities"},
          lambda,
          {"mode_cap", P::Int, "1000000", "mode cap"},
          step_cap,
          {"check", P::Bool, "true", "run the property checker after every attempted emission"},
          placement}},
        {"cp-survival",
         "survival to t_max over a (lambda_i, lambda_e) grid",
         {{"lambda_i", P::DoubleList, "1,2,3", "interior rates"},
          {"lambda_e", P::DoubleList, "1,2,3", "border rates"},
          {"t_max", P::Double, "20", "horizon"},
          {"initial", P::IntList, "0", "initially infected sites"}}},
        {"cp-edge",
         "right-edge speed of the classical process on a coupled lambda grid",
         {{"lambda", P::DoubleList, "1.0,1.5,1.6,1.7,1.8,2.5", "infection rates"},
          {"width", P::IntList, "200", "window width, one value or one per lambda"},
          {"t_max", P::Double, "60", "horizon; slopes use [t_max/2, t_max]"}}},
        {"cp-cylinder",
         "laws of the edge-view pattern on [-L, 0] from two initial conditions",
         {{"lambda_i", P::Double, "1.6489", "interior rate"},
          {"lambda_e", P::Double, "1.8489", "border rate"},
          {"L", P::Int, "4", "pattern length minus one"},
          {"times", P::DoubleList, "20,200", "observation times"},
          {"width", P::Int, "60", "window width"},
          {"gap", P::Int, "20", "gap of the second initial condition"},
          {"bootstrap", P::Int, "1000", "bootstrap resamples for the TV interval"}}},
        {"bp-yaglom",
         "law of the branching process at t given survival, against the spectral oracle",
         {offspring,
          {"rate", P::Double, "1", "per-capita event rate"},
          {"t", P::Double, "15", "time"},
          {"initial", P::Int, "1", "initial count"},
          {"n_max", P::Int, "200", "oracle truncation"},
          {"tol", P::Double, "1e-10", "oracle residual tolerance"}}},
        {"bp-qprocess",
         "occupation law of the Q-process against nu h",
         {offspring,
          {"rate", P::Double, "1", "per-capita event rate"},
          {"horizon", P::Double, "10000", "trajectory length"},
          {"initial", P::Int, "1", "initial state"},
          {"n_max", P::Int, "200", "oracle truncation"},
          {"tol", P::Double, "1e-10", "oracle residual tolerance"}}},
        {"bp-gevent",
         "P(G_t(k) | survival) and P(O_t^c | survival) along a time grid",
         {offspring,
          {"lambda", P::Double, "0.5", "BRW birth rate"},
          {"dim", P::Int, "1", "BRW dimension"},
          {"times", P::DoubleList, "5,10,20,40", "time grid"},
          {"k", P::Int, "3", "alternation pairs"},
          {"method", P::String, "size_biased", "plain | size_biased"}}},
        {"brw-yaglom",
         "law of the BRW modulo translations at t given survival",
         {{"lambda", P::Double, "0.5", "birth rate"},
          {"dim", P::Int, "1", "dimension (1..3)"},
          {"t", P::Double, "5", "time"},
          {"founders", P::Int, "1", "initial particles on consecutive sites"}}},
        {"tree-qsd",
         "law of the pruned genealogy tree at t given survival",
         {offspring, {"t", P::Double, "5", "time"}, {"founders", P::Int, "1", "initial alive leaves"}}},
    };
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

long to_long(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    errno = 0;
    char* end = nullptr;
    // Accept 1e6 style integers as long as they are exact.
    const double d = std::strtod(t.c_str(), &end);
    if (t.empty() || *end != '\0' || errno != 0 || d != std::floor(d) || std::abs(d) > 9.0e18)
        throw ParameterError("config: '" + key + "' expects an integer, got '" + v + "'");
    return static_cast<long>(d);
}

double to_double(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    errno = 0;
    char* end = nullptr;
    const double d = std::strtod(t.c_str(), &end);
    if (t.empty() || *end != '\0' || errno != 0 || !std::isfinite(d))
        throw ParameterError("config: '" + key + "' expects a number, got '" + v + "'");
    return d;
}

} // namespace

const std::vector<ExperimentInfo>& experiments() {
    static const std::vector<ExperimentInfo> table = build_table();
    return table;
}

const ExperimentInfo& experiment_info(const std::string& name) {
    for (const auto& e : experiments())
        if (e.name == name) return e;
    throw ParameterError("unknown experiment '" + name + "'");
}

void check_value(ParamType type, const std::string& key, const std::string& value) {
    switch (type) {
    case P::Int: to_long(key, value); break;
    case P::Double: to_double(key, value); break;
    case P::String:
        if (trim(value).empty()) throw ParameterError("config: '" + key + "' is empty");
        break;
    case P::Bool: {
        const auto v = trim(value);
        if (v != "true" && v != "false" && v != "1" && v != "0")
            throw ParameterError("config: '" + key + "' expects true or false, got '" + value + "'");
        break;
    }
    case P::IntList:
        if (split_list(value).empty()) throw ParameterError("config: '" + key + "' is an empty list");
        for (const auto& x : split_list(value)) to_long(key, x);
        break;
    case P::DoubleList:
        if (split_list(value).empty()) throw ParameterError("config: '" + key + "' is an empty list");
        for (const auto& x : split_list(value)) to_double(key, x);
        break;
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    const std::string t = trim(value);
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos)
        throw ParameterError("'" + key + "' expects an unsigned 64-bit integer, got '" + value + "'");
    errno = 0;
    const unsigned long long v = std::strtoull(t.c_str(), nullptr, 10);
    if (errno == ERANGE) throw ParameterError("'" + key + "' is out of range: '" + value + "'");
    return v;
}

ExperimentConfig::ExperimentConfig(const std::string& experiment) : info_(&experiment_info(experiment)) {
    for (const auto& p : info_->params) values_[p.key] = p.default_value;
}

const ParamDef& ExperimentConfig::def(const std::string& key) const {
    for (const auto& p : info_->params)
        if (p.key == key) return p;
    throw ParameterError("config: unknown key '" + key + "' for experiment " + info_->name);
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (key == "seed") {
        config_seed_ = parse_u64(key, value);
    } else if (key == "reps") {
        reps_ = parse_u64(key, value);
    } else if (key == "threads") {
        set_threads(parse_u64(key, value));
    } else if (key == "out") {
        if (trim(value).empty()) throw ParameterError("config: 'out' is empty");
        out_ = trim(value);
    } else {
        const auto& d = def(key);
        check_value(d.type, key, value);
        values_[key] = trim(value);
    }
}

void ExperimentConfig::set_threads(std::size_t t) {
    if (t < 1 || t > 1024) throw ParameterError("threads must be in 1..1024");
    threads_ = t;
}

void ExperimentConfig::load_file(const std::string& path) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ParameterError(std::string("config: ") + e.what());
    }
    auto is_run_key = [](const std::string& k) {
        return std::find(run_keys().begin(), run_keys().end(), k) != run_keys().end();
    };
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            if (!is_run_key(name)) throw ParameterError("config: unknown top-level key '" + name + "'");
            set(name, node.data());
            continue;
        }
        if (name == "run") {
            for (const auto& [k, v] : node) {
                if (!is_run_key(k)) throw ParameterError("config: unknown key '" + k + "' in [run]");
                set(k, v.data());
            }
            continue;
        }
        const ExperimentInfo& other = experiment_info(name);
        for (const auto& [k, v] : node) {
            if (name == info_->name) {
                set(k, v.data());
                continue;
            }
            if (is_run_key(k)) continue;
            const auto it = std::find_if(other.params.begin(), other.params.end(),
                                         [&](const ParamDef& p) { return p.key == k; });
            if (it == other.params.end())
                throw ParameterError("config: unknown key '" + k + "' in [" + name + "]");
            check_value(it->type, k, v.data());
        }
    }
}

SeedChoice ExperimentConfig::resolve_seed() const {
    if (cli_seed_) return {*cli_seed_, "cli"};
    if (const char* env = std::getenv("PDL_MASTER_SEED"); env && *env)
        return {parse_u64("PDL_MASTER_SEED", env), "env"};
    if (config_seed_) return {*config_seed_, "config"};
    return {0, "default"};
}

long ExperimentConfig::get_int(const std::string& key) const {
    def(key);
    return to_long(key, values_.at(key));
}

double ExperimentConfig::get_double(const std::string& key) const {
    def(key);
    return to_double(key, values_.at(key));
}

const std::string& ExperimentConfig::get_string(const std::string& key) const {
    def(key);
    return values_.at(key);
}

bool ExperimentConfig::get_bool(const std::string& key) const {
    def(key);
    const auto& v = values_.at(key);
    return v == "true" || v == "1";
}

std::vector<long> ExperimentConfig::get_int_list(const std::string& key) const {
    def(key);
    std::vector<long> out;
    for (const auto& x : split_list(values_.at(key))) out.push_back(to_long(key, x));
    return out;
}

std::vector<double> ExperimentConfig::get_double_list(const std::string& key) const {
    def(key);
    std::vector<double> out;
    for (const auto& x : split_list(values_.at(key))) out.push_back(to_double(key, x));
    return out;
}

std::string ExperimentConfig::canonical() const {
    std::string s = "experiment=" + info_->name + "\n";
    for (const auto& [k, v] : values_) s += k + "=" + v + "\n";
    s += "reps=" + std::to_string(reps_) + "\n";
    return s;
}

std::uint64_t ExperimentConfig::hash() const {
    return kernel::fnv1a64(canonical());
}

} // namespace pdl::harness
