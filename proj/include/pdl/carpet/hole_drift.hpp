#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pdl/kernel/stream.hpp"

namespace pdl::carpet {

double harmonic(std::uint64_t v);

// Finite law given by an explicit atom list.
class AtomLaw {
public:
    AtomLaw() = default;
    explicit AtomLaw(std::vector<std::pair<int, double>> atoms);

    const std::vector<std::pair<int, double>>& atoms() const { return atoms_; }
    double mean() const;
    double variance() const;
    int sample(kernel::Stream& s) const;

private:
    std::vector<std::pair<int, double>> atoms_;
    std::vector<double> cdf_;
};

// Hole displacement laws at offset v: Y_v and its emission-adjusted
// modification with delta = 1/(K(1+lambda)).
struct HoleDriftLaw {
    int v = 1;
    double lambda = 1.0;
    int K = 4;
    double delta = 0.0;
    AtomLaw y;
    AtomLaw y_tilde;

    double mean_y() const;        // closed form
    double mean_y_tilde() const;  // closed form
    // Upper bound lambda/(lambda+1) - (log v - log 2)/(2(lambda+1)).
    double drift_bound() const;
};

HoleDriftLaw hole_drift(int v, double lambda, int K);

} // namespace pdl::carpet
