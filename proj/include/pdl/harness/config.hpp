#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pdl::harness {

enum class ParamType { Int, Double, String, Bool, IntList, DoubleList };

struct ParamDef {
    std::string key;
    ParamType type;
    std::string default_value;
    std::string help;
};

struct ExperimentInfo {
    std::string name;
    std::string summary;
    std::vector<ParamDef> params;
};

const std::vector<ExperimentInfo>& experiments();
// Throws ParameterError for unknown names.
const ExperimentInfo& experiment_info(const std::string& name);

// Keys accepted in every section besides the experiment's own parameters.
inline const std::vector<std::string>& run_keys() {
    static const std::vector<std::string> keys{"seed", "reps", "threads", "out"};
    return keys;
}

struct SeedChoice {
    std::uint64_t seed = 0;
    // "cli", "env", "config" or "default".
    std::string source = "default";
};

// Parameters of one experiment run. Every value is type-checked when set,
// so a config that loads is a config that runs.
class ExperimentConfig {
public:
    explicit ExperimentConfig(const std::string& experiment);

    const std::string& experiment() const { return info_->name; }
    const ExperimentInfo& info() const { return *info_; }

    // Model parameter or run key.
    void set(const std::string& key, const std::string& value);
    // INI file: top-level keys and [run] hold run keys; the section named
    // after this experiment holds its parameters. Sections for other known
    // experiments are validated and otherwise ignored.
    void load_file(const std::string& path);

    void set_cli_seed(std::uint64_t s) { cli_seed_ = s; }
    void set_reps(std::uint64_t r) { reps_ = r; }
    void set_threads(std::size_t t);
    void set_out(const std::string& dir) { out_ = dir; }

    // --seed, then PDL_MASTER_SEED, then the config file, then 0.
    SeedChoice resolve_seed() const;
    std::uint64_t reps() const { return reps_; }
    std::size_t threads() const { return threads_; }
    const std::string& out() const { return out_; }

    long get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    const std::string& get_string(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<long> get_int_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;

    // "experiment=...\nkey=value\n..." over parameters and reps, sorted.
    std::string canonical() const;
    // FNV-1a of canonical(); seed, threads and out are excluded.
    std::uint64_t hash() const;

private:
    const ParamDef& def(const std::string& key) const;

    const ExperimentInfo* info_ = nullptr;
    std::map<std::string, std::string> values_;
    std::optional<std::uint64_t> cli_seed_, config_seed_;
    std::uint64_t reps_ = 100;
    std::size_t threads_ = 1;
    std::string out_ = "out";
};

// Throws ParameterError when `value` does not parse as `type`.
void check_value(ParamType type, const std::string& key, const std::string& value);
std::uint64_t parse_u64(const std::string& key, const std::string& value);

} // namespace pdl::harness
