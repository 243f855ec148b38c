#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdl/branching/offspring.hpp"
#include "pdl/kernel/stream.hpp"

namespace pdl::branching {

// Count dynamics on 1..n_max: from i, jump to i - 1 + z at rate
// rate * i * p_z (z != 1). Jumps to 0 or above n_max are killed.
struct SubGenerator {
    struct Entry {
        std::size_t to = 0;
        double rate = 0;
    };

    std::size_t n_max = 0;
    // rows[i - 1]: off-diagonal entries inside 1..n_max.
    std::vector<std::vector<Entry>> rows;
    // exit[i - 1]: total jump rate out of i (including killed jumps).
    std::vector<double> exit;

    static SubGenerator build(const OffspringDist& dist, std::size_t n_max, double rate = 1.0);
    // Offspring law {0: 1/(1+lambda), 2: lambda/(1+lambda)} at per-capita rate 1 + lambda.
    static SubGenerator brw_projection(double lambda, std::size_t n_max);

    // (vQ')_j and (Q'h)_i over index 0..n_max-1 (state = index + 1).
    std::vector<double> left_apply(const std::vector<double>& v) const;
    std::vector<double> right_apply(const std::vector<double>& h) const;
    double max_exit() const;
};

struct SpectralSolution {
    std::size_t n_max = 0;
    double alpha = 0;
    // nu[j - 1], h[j - 1] for states j = 1..n_max.
    std::vector<double> nu;
    std::vector<double> h;
    // |nu Q' + alpha nu|_1 and |Q' h + alpha h|_inf / |h|_inf.
    double residual_left = 0;
    double residual_right = 0;
    std::uint64_t iterations = 0;

    double nu_at(std::size_t j) const { return j >= 1 && j <= n_max ? nu[j - 1] : 0.0; }
    double h_at(std::size_t j) const { return j >= 1 && j <= n_max ? h[j - 1] : 0.0; }

    std::string to_text() const;
    static SpectralSolution from_text(const std::string& text);
};

struct SpectralOptions {
    double tol = 1e-10;
    std::uint64_t max_iterations = 1000000;
};

// Leading eigen-triple of Q' by power iteration on I + Q'/c with
// c > max exit rate. Throws ConvergenceError with the residuals reached.
SpectralSolution spectral_oracle(const SubGenerator& q, const SpectralOptions& opts = {});
SpectralSolution spectral_oracle(const OffspringDist& dist, std::size_t n_max, const SpectralOptions& opts = {},
                                 double rate = 1.0);

struct QTrajectory {
    std::vector<double> times;
    std::vector<std::size_t> states;
    // Time spent in each state over [0, t], indexed by state - 1.
    std::vector<double> occupation;
};

// h-transformed chain with rates q(i, j) h_j / h_i on 1..n_max.
// Throws TruncationError if i is outside 1..n_max.
QTrajectory q_process_simulate(const SubGenerator& q, const SpectralSolution& sol, std::size_t initial, double t,
                               kernel::Stream& s, bool keep_path = true);

} // namespace pdl::branching
