#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pdl/contact/process.hpp"
#include "pdl/harness/stats.hpp"
#include "pdl/kernel/stream.hpp"

namespace pdl::contact {

// Survival to t_max is a finite-time proxy: the estimate is nonincreasing in
// t_max and overestimates the probability of surviving forever.
struct SurvivalEstimate {
    double theta = 0;
    double ci_lo = 0, ci_hi = 1;
    std::size_t reps = 0;
    std::size_t survivors = 0;
};

bool survives(const ContactParams& params, const std::vector<long>& initial, double t_max, const GraphicalLog& log);

// Replicate r uses the log keyed key/r with lambda_max = max(lambda_i, lambda_e).
SurvivalEstimate estimate_survival(const ContactParams& params, const std::vector<long>& initial, double t_max,
                                   std::size_t reps, const kernel::StreamKey& key, double level = 0.95);

struct EdgeRun {
    double slope = 0;
    // The window emptied, so the edge was held up by the fill rule.
    bool starved = false;
};

// Runs grid point g from the half-line surrogate of width widths[g] on the
// same log and fits R_t against t over the integer times in [t_max/2, t_max].
// Below criticality the edge recedes faster than linearly, so such points
// need far wider windows than points near or above it.
std::vector<EdgeRun> edge_speed_runs(const std::vector<ContactParams>& grid, const std::vector<long>& widths,
                                     double t_max, const GraphicalLog& log);

struct SpeedEstimate {
    double mean = 0, se = 0, ci_lo = 0, ci_hi = 0;
    std::size_t used = 0;
    std::size_t discarded = 0;
};

SpeedEstimate aggregate_speed(const std::vector<EdgeRun>& runs, double level = 0.95);

// One log per replicate (key/r, lambda_max = largest rate in the grid),
// shared by all grid points.
std::vector<SpeedEstimate> estimate_edge_speed(const std::vector<ContactParams>& grid,
                                               const std::vector<long>& widths, double t_max,
                                               std::size_t reps, const kernel::StreamKey& key,
                                               double level = 0.95);

// Linear interpolation at the first sign change of the means along xs.
std::optional<double> zero_crossing(const std::vector<double>& xs, const std::vector<SpeedEstimate>& est);

// {0} together with every site <= -gap, as a windowed AllInfected surrogate.
InfectionConfig gapped_half_line(long gap, long width);

// Patterns of Psi(xi_t) restricted to [-L, 0] at each time of t_grid.
std::vector<std::string> cylinder_run(const ContactParams& params, const InfectionConfig& init, long L,
                                      const std::vector<double>& t_grid, const GraphicalLog& log);

struct CylinderEstimate {
    std::vector<double> times;
    // laws[i][k]: law of the pattern from initial condition i at times[k].
    std::vector<std::vector<harness::Distribution>> laws;
    // Total variation between initial conditions 0 and 1 at each time, with
    // a basic bootstrap interval.
    std::vector<double> tv;
    std::vector<harness::Interval> tv_ci;
    std::size_t reps = 0;
};

// All initial conditions of replicate r run on the same log keyed key/r.
CylinderEstimate estimate_cylinder(const ContactParams& params, long L, const std::vector<double>& t_grid,
                                   std::size_t reps, const std::vector<InfectionConfig>& inits,
                                   const kernel::StreamKey& key, std::size_t bootstrap = 1000,
                                   double level = 0.95);

struct EdgeTrace {
    std::vector<double> times;
    // Right edge of the copy running at each sampled time, relative to the
    // site where that copy was started.
    std::vector<long> edge;
    // tau[0] = 0 and tau[k] is the extinction time of the k-th copy.
    std::vector<double> tau;

    // N(t) = #{k >= 1 : tau_k <= t}.
    std::size_t count(double t) const;
    // t - tau_{N(t)}.
    double age(double t) const;
};

// Restarted copies of the right-edge-only process: a copy started from {0}
// at tau_{k-1} runs until it dies at tau_k, when the next one starts.
EdgeTrace restart_times(const ContactParams& params, double t_max, const GraphicalLog& log,
                        double sample_dt = 1.0);

} // namespace pdl::contact
