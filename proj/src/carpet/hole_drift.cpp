#include "pdl/carpet/hole_drift.hpp"

#include <algorithm>
#include <cmath>

#include "pdl/kernel/errors.hpp"

namespace pdl::carpet {

double harmonic(std::uint64_t v) {
    double h = 0.0;
    for (std::uint64_t k = v; k >= 1; --k) h += 1.0 / static_cast<double>(k);
    return h;
}

AtomLaw::AtomLaw(std::vector<std::pair<int, double>> atoms) : atoms_(std::move(atoms)) {
    double acc = 0.0;
    for (const auto& [x, p] : atoms_) {
        if (p < -1e-15) throw ParameterError("AtomLaw: negative probability");
        acc += std::max(p, 0.0);
        cdf_.push_back(acc);
    }
    if (std::abs(acc - 1.0) > 1e-12) throw ParameterError("AtomLaw: probabilities do not sum to 1");
}

double AtomLaw::mean() const {
    double m = 0.0;
    for (const auto& [x, p] : atoms_) m += x * p;
    return m;
}

double AtomLaw::variance() const {
    const double m = mean();
    double s = 0.0;
    for (const auto& [x, p] : atoms_) s += (x - m) * (x - m) * p;
    return s;
}

int AtomLaw::sample(kernel::Stream& s) const {
    const double u = s.uniform() * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), atoms_.size() - 1);
    return atoms_[i].first;
}

double HoleDriftLaw::mean_y() const {
    return lambda / (1.0 + lambda) - harmonic(static_cast<std::uint64_t>(v)) / (2.0 * (1.0 + lambda));
}

double HoleDriftLaw::mean_y_tilde() const { return mean_y() + v * delta; }

double HoleDriftLaw::drift_bound() const {
    return lambda / (lambda + 1.0) - (std::log(static_cast<double>(v)) - std::log(2.0)) / (2.0 * (lambda + 1.0));
}

HoleDriftLaw hole_drift(int v, double lambda, int K) {
    if (v < 1) throw ParameterError("hole_drift: v must be >= 1");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("hole_drift: lambda must be positive");
    if (K < 1) throw ParameterError("hole_drift: K must be >= 1");
    HoleDriftLaw law;
    law.v = v;
    law.lambda = lambda;
    law.K = K;
    law.delta = 1.0 / (K * (1.0 + lambda));
    const double up = lambda / (1.0 + lambda);
    const double half = 0.5 / (1.0 + lambda);

    // P(Z = z) = 1/(z(z+1)); min(Z, v) puts the tail mass 1/v on v.
    std::vector<std::pair<int, double>> y{{1, up}, {0, half}};
    std::vector<std::pair<int, double>> yt{{1, up}, {0, half + law.delta}};
    double body = 0.0;
    for (int k = 1; k < v; ++k) {
        const double p = half / (static_cast<double>(k) * (k + 1.0));
        y.emplace_back(-k, p);
        yt.emplace_back(-k, p);
        body += p;
    }
    y.emplace_back(-v, half / static_cast<double>(v));
    const double bottom = half - law.delta - body;
    if (bottom < -1e-15)
        throw ParameterError("hole_drift: negative bottom atom (need v <= K/2), v = " + std::to_string(v) +
                             ", K = " + std::to_string(K));
    yt.emplace_back(-v, std::max(bottom, 0.0));
    law.y = AtomLaw(std::move(y));
    law.y_tilde = AtomLaw(std::move(yt));
    return law;
}

} // namespace pdl::carpet
