#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdl/branching/brw.hpp"
#include "pdl/branching/genealogy.hpp"
#include "pdl/branching/offspring.hpp"
#include "pdl/harness/stats.hpp"
#include "pdl/kernel/stream.hpp"

namespace pdl::branching {

enum class Model { Branching, Genealogy, Brw };
std::string to_string(Model m);
Model parse_model(const std::string& s);

struct ModelSpec {
    Model model = Model::Branching;
    // Branching and genealogy models.
    OffspringDist dist{std::vector<double>{2.0 / 3, 0.0, 1.0 / 3}};
    double rate = 1.0;
    // BRW model.
    double lambda = 0.5;
    int dim = 1;

    std::uint64_t initial_count = 1;
    GenealogyTree initial_tree = GenealogyTree::single();
    std::vector<Site> initial_sites{Site{}};

    // Law and per-capita rate of the population size.
    OffspringDist count_dist() const;
    double count_rate() const;
    std::uint64_t initial_population() const;
    std::size_t founders() const;
    void validate() const;
};

enum class Method {
    Plain,
    // Runs under the size-biased (spine) measure and reweights by the
    // likelihood ratio, see simulate_count_size_biased.
    SizeBiased,
};
std::string to_string(Method m);

// Canonical state at time t of one plain run, or nullopt if absorbed.
std::optional<std::string> yaglom_sample(const ModelSpec& spec, double t, kernel::Stream& s);

struct YaglomEstimate {
    harness::Distribution law;
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t reps = 0;
    std::uint64_t survivors = 0;
    double survival = 0;
};

// Run r uses key.child(r). Throws InsufficientData if no run survives.
YaglomEstimate yaglom_estimate(const ModelSpec& spec, double t, std::uint64_t reps, const kernel::StreamKey& key);

// Alive-leaf count of a canonical tree encoding.
std::size_t tree_alive_count(const std::string& encoding);
// Pushes a tree law forward to the law of alive-leaf counts.
harness::Distribution project_tree_law(const harness::Distribution& law);
// Oracle nu as a Distribution keyed by state, dropping entries below `floor`.
harness::Distribution count_law(const std::vector<double>& nu, double floor = 0.0);

// Online detector of k alternating visits 1, 2, 1, 2, ... of a count path.
class AlternationScanner {
public:
    explicit AlternationScanner(unsigned k) : k_(k) {}
    void observe(std::uint64_t count);
    bool done() const { return pairs_ >= k_; }

private:
    unsigned k_;
    unsigned pairs_ = 0;
    bool want_two_ = false;
};

struct ConditionalEstimate {
    double p = 0;
    double se = 0;
    double lo = 0;
    double hi = 0;
    std::uint64_t reps = 0;
    // Plain: surviving runs. Size-biased: every run contributes.
    std::uint64_t survivors = 0;
    double survival = 0;
    Method method = Method::Plain;
};

// P(G_t(k) | X_t > 0) from initial count 1.
ConditionalEstimate estimate_G(const ModelSpec& spec, double t, unsigned k, std::uint64_t reps,
                               const kernel::StreamKey& key, Method method = Method::Plain, double level = 0.95);

struct OtEstimate {
    // P(at least two founders have alive descendants | survival).
    ConditionalEstimate oc;
    // Diameter law on that event (tree diameter or BRW support diameter).
    std::map<long, double> diameter_law;
    double mean_diameter = 0;
    double mean_diameter_se = 0;
    // Runs that landed on the event.
    std::uint64_t oc_runs = 0;
};

// Size-biased estimation requires exactly two founders with one individual each.
OtEstimate o_t_probability(const ModelSpec& spec, double t, std::uint64_t reps, const kernel::StreamKey& key,
                           Method method = Method::Plain, double level = 0.95);

} // namespace pdl::branching
