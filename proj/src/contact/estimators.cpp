#include "pdl/contact/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "pdl/kernel/errors.hpp"

namespace pdl::contact {

bool survives(const ContactParams& params, const std::vector<long>& initial, double t_max, const GraphicalLog& log) {
    Process p(InfectionConfig::finite(initial), log, params, 0.0);
    while (!p.config().empty() && p.next_time() <= t_max) p.step();
    return !p.config().empty();
}

SurvivalEstimate estimate_survival(const ContactParams& params, const std::vector<long>& initial, double t_max,
                                   std::size_t reps, const kernel::StreamKey& key, double level) {
    if (reps < 1) throw ParameterError("estimate_survival: reps must be >= 1");
    if (!(t_max > 0)) throw ParameterError("estimate_survival: t_max must be > 0");
    const double lmax = std::max(params.lambda_i, params.lambda_e);
    SurvivalEstimate e;
    e.reps = reps;
    for (std::size_t r = 0; r < reps; ++r) {
        GraphicalLog log(key.child(r), lmax, 0.0, t_max);
        e.survivors += survives(params, initial, t_max, log);
    }
    e.theta = static_cast<double>(e.survivors) / static_cast<double>(reps);
    const auto ci = harness::binomial_ci(e.survivors, reps, level);
    e.ci_lo = ci.lo;
    e.ci_hi = ci.hi;
    return e;
}

std::vector<EdgeRun> edge_speed_runs(const std::vector<ContactParams>& grid, const std::vector<long>& widths,
                                     double t_max, const GraphicalLog& log) {
    if (!(t_max >= 2)) throw ParameterError("edge speed: t_max must be >= 2");
    if (widths.size() != grid.size()) throw ParameterError("edge speed: one window width per grid point");
    std::vector<EdgeRun> out;
    out.reserve(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto& params = grid[g];
        Process p(InfectionConfig::half_line(0, widths[g], Fill::AllInfected), log, params, 0.0);
        EdgeRun run;
        std::vector<double> ts, rs;
        for (double s = 1; s <= t_max; s += 1) {
            p.advance_to(s);
            if (p.config().count() == 0) run.starved = true;
            if (s >= t_max / 2) {
                ts.push_back(s);
                rs.push_back(static_cast<double>(p.config().right()));
            }
            p.track_window();
        }
        run.slope = harness::linear_fit(ts, rs).slope;
        out.push_back(run);
    }
    return out;
}

SpeedEstimate aggregate_speed(const std::vector<EdgeRun>& runs, double level) {
    SpeedEstimate e;
    std::vector<double> xs;
    for (const auto& r : runs) {
        if (r.starved)
            ++e.discarded;
        else
            xs.push_back(r.slope);
    }
    e.used = xs.size();
    if (xs.size() < 2) throw InsufficientData("edge speed: fewer than two usable runs");
    const auto m = harness::mean_ci(xs, level);
    e.mean = m.mean;
    e.se = m.se;
    e.ci_lo = m.lo;
    e.ci_hi = m.hi;
    return e;
}

std::vector<SpeedEstimate> estimate_edge_speed(const std::vector<ContactParams>& grid,
                                               const std::vector<long>& widths, double t_max,
                                               std::size_t reps, const kernel::StreamKey& key, double level) {
    double lmax = 0;
    for (const auto& p : grid) lmax = std::max({lmax, p.lambda_i, p.lambda_e});
    std::vector<std::vector<EdgeRun>> per(grid.size());
    for (std::size_t r = 0; r < reps; ++r) {
        GraphicalLog log(key.child(r), lmax, 0.0, t_max);
        const auto runs = edge_speed_runs(grid, widths, t_max, log);
        for (std::size_t g = 0; g < grid.size(); ++g) per[g].push_back(runs[g]);
    }
    std::vector<SpeedEstimate> out;
    for (const auto& v : per) out.push_back(aggregate_speed(v, level));
    return out;
}

std::optional<double> zero_crossing(const std::vector<double>& xs, const std::vector<SpeedEstimate>& est) {
    for (std::size_t i = 1; i < xs.size() && i < est.size(); ++i) {
        const double a = est[i - 1].mean, b = est[i].mean;
        if (a == 0) return xs[i - 1];
        if ((a < 0) != (b < 0) || b == 0) return xs[i - 1] + (xs[i] - xs[i - 1]) * (-a) / (b - a);
    }
    return std::nullopt;
}

InfectionConfig gapped_half_line(long gap, long width) {
    if (gap < 1 || gap >= width) throw ParameterError("gapped_half_line: need 1 <= gap < width");
    std::vector<long> sites{0};
    for (long x = -width + 1; x <= -gap; ++x) sites.push_back(x);
    return InfectionConfig::windowed(-width + 1, width, sites, Fill::AllInfected);
}

std::vector<std::string> cylinder_run(const ContactParams& params, const InfectionConfig& init, long L,
                                      const std::vector<double>& t_grid, const GraphicalLog& log) {
    if (L < 0) throw ParameterError("cylinder: L must be >= 0");
    Process p(init, log, params, 0.0);
    std::vector<std::string> out;
    double s = 0;
    for (double t : t_grid) {
        if (t < s) throw ParameterError("cylinder: t_grid must be nondecreasing");
        while (s + 1 <= t) {
            s += 1;
            p.advance_to(s);
            p.track_window();
        }
        p.advance_to(t);
        s = t;
        out.push_back(p.config().empty() ? std::string() : p.config().pattern(L));
    }
    return out;
}

CylinderEstimate estimate_cylinder(const ContactParams& params, long L, const std::vector<double>& t_grid,
                                   std::size_t reps, const std::vector<InfectionConfig>& inits,
                                   const kernel::StreamKey& key, std::size_t bootstrap, double level) {
    if (reps < 1) throw ParameterError("cylinder: reps must be >= 1");
    if (inits.empty()) throw ParameterError("cylinder: need at least one initial condition");
    const double t_max = t_grid.empty() ? 0.0 : *std::max_element(t_grid.begin(), t_grid.end());
    const double lmax = std::max(params.lambda_i, params.lambda_e);
    const std::size_t T = t_grid.size(), I = inits.size();
    // samples[i][k][r]
    std::vector<std::vector<std::vector<std::string>>> samples(
        I, std::vector<std::vector<std::string>>(T, std::vector<std::string>(reps)));
    for (std::size_t r = 0; r < reps; ++r) {
        GraphicalLog log(key.child(r), lmax, 0.0, std::max(t_max, 0.0));
        for (std::size_t i = 0; i < I; ++i) {
            const auto pats = cylinder_run(params, inits[i], L, t_grid, log);
            for (std::size_t k = 0; k < T; ++k) samples[i][k][r] = pats[k];
        }
    }
    CylinderEstimate e;
    e.times = t_grid;
    e.reps = reps;
    auto law = [&](const std::vector<std::string>& v, const std::vector<std::size_t>* idx) {
        std::map<std::string, double> counts;
        if (idx)
            for (auto j : *idx) counts[v[j]] += 1;
        else
            for (const auto& s : v) counts[s] += 1;
        return harness::normalize(counts);
    };
    e.laws.assign(I, {});
    for (std::size_t i = 0; i < I; ++i)
        for (std::size_t k = 0; k < T; ++k) e.laws[i].push_back(law(samples[i][k], nullptr));
    if (I >= 2) {
        kernel::Stream bs(key.child("bootstrap"));
        std::vector<std::vector<double>> boot(T);
        std::vector<std::size_t> idx(reps);
        for (std::size_t b = 0; b < bootstrap; ++b) {
            for (auto& j : idx) j = bs.uniform_index(reps);
            for (std::size_t k = 0; k < T; ++k)
                boot[k].push_back(harness::tv_distance(law(samples[0][k], &idx), law(samples[1][k], &idx)));
        }
        for (std::size_t k = 0; k < T; ++k) {
            e.tv.push_back(harness::tv_distance(e.laws[0][k], e.laws[1][k]));
            harness::Interval ci{e.tv.back(), e.tv.back()};
            if (!boot[k].empty()) {
                auto& v = boot[k];
                std::sort(v.begin(), v.end());
                const double q = (1 - level) / 2;
                auto at = [&](double p) {
                    const auto j = static_cast<std::size_t>(std::floor(p * static_cast<double>(v.size() - 1)));
                    return v[j];
                };
                // Basic bootstrap: reflect the quantiles around the estimate,
                // which undoes the upward bias of the plug-in distance.
                const double t = e.tv.back();
                ci = {std::clamp(2 * t - at(1 - q), 0.0, 1.0), std::clamp(2 * t - at(q), 0.0, 1.0)};
            }
            e.tv_ci.push_back(ci);
        }
    }
    return e;
}

std::size_t EdgeTrace::count(double t) const {
    std::size_t n = 0;
    for (std::size_t k = 1; k < tau.size(); ++k)
        if (tau[k] <= t) ++n;
    return n;
}

double EdgeTrace::age(double t) const { return t - tau[count(t)]; }

EdgeTrace restart_times(const ContactParams& params, double t_max, const GraphicalLog& log, double sample_dt) {
    if (params.border != BorderMode::RightEdgeOnly)
        throw ParameterError("restart_times: the restarted process uses RightEdgeOnly borders");
    if (!(sample_dt > 0)) throw ParameterError("restart_times: sample_dt must be > 0");
    EdgeTrace tr;
    tr.tau.push_back(0.0);
    auto copy = std::make_unique<Process>(InfectionConfig::finite({0}), log, params, 0.0);
    for (double s = sample_dt; s <= t_max + 1e-12; s += sample_dt) {
        const double target = std::min(s, t_max);
        for (;;) {
            while (!copy->config().empty() && copy->next_time() <= target) copy->step();
            if (!copy->config().empty()) break;
            const double died = *copy->extinction_time();
            tr.tau.push_back(died);
            copy = std::make_unique<Process>(InfectionConfig::finite({0}), log, params, died);
        }
        copy->advance_to(target);
        tr.times.push_back(target);
        tr.edge.push_back(copy->config().right());
    }
    return tr;
}

} // namespace pdl::contact
