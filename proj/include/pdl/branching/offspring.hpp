#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pdl/kernel/stream.hpp"

namespace pdl::branching {

// Offspring law with finite support: pmf()[z] = P(Z = z).
class OffspringDist {
public:
    OffspringDist() = default;
    explicit OffspringDist(std::vector<double> pmf);
    static OffspringDist from_map(const std::map<int, double>& pmf);
    // Parses "0:0.6667,2:0.3333" or "0:2/3,2:1/3"; rounded entries are renormalized.
    static OffspringDist parse(const std::string& text);

    const std::vector<double>& pmf() const { return pmf_; }
    double p(std::size_t z) const { return z < pmf_.size() ? pmf_[z] : 0.0; }
    std::size_t max_offspring() const { return pmf_.size() - 1; }
    double mean() const { return mean_; }
    bool subcritical() const { return mean_ < 1; }
    bool non_lazy() const { return p(0) + p(1) < 1; }

    std::size_t sample(kernel::Stream& s) const;
    // Law of z p_z / m, for the distinguished line of the size-biased process.
    OffspringDist size_biased() const;

    std::string str() const;

private:
    std::vector<double> pmf_{1.0};
    double mean_ = 0;
};

struct BranchingEvent {
    double dt = 0;
    // Index of the individual that reproduced, uniform over 0..count-1.
    std::uint64_t individual = 0;
    std::uint64_t offspring = 0;
    std::uint64_t count = 0;
};

// One event of the plain branching process with per-capita rate `rate`.
// Throws AbsorbedError from count 0.
BranchingEvent step_branching(std::uint64_t count, const OffspringDist& dist, kernel::Stream& s, double rate = 1.0);

// Observer called after every jump with (time, new count).
using CountObserver = std::function<void(double, std::uint64_t)>;

// Runs the count from `initial` up to time t (or absorption) and returns
// X_t. Events that leave the count unchanged (Z = 1) are skipped.
std::uint64_t simulate_count(std::uint64_t initial, const OffspringDist& dist, double t, kernel::Stream& s,
                             double rate = 1.0, const CountObserver& observer = {});

// Same under the size-biased measure: from n the count jumps to n - 1 + z
// (z != 1) at rate rate * p_z * (n - 1 + z). This is the h-transform by the
// martingale X_t exp((1 - m) rate t); it never reaches 0. A path functional
// F of the plain process satisfies
//   E[F; X_t > 0] = X_0 exp(-(1 - m) rate t) E_sb[F / X_t].
std::uint64_t simulate_count_size_biased(std::uint64_t initial, const OffspringDist& dist, double t,
                                         kernel::Stream& s, double rate = 1.0,
                                         const CountObserver& observer = {});

} // namespace pdl::branching
