#include "pdl/branching/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "pdl/kernel/errors.hpp"

namespace pdl::branching {

SubGenerator SubGenerator::build(const OffspringDist& dist, std::size_t n_max, double rate) {
    if (n_max < 1) throw ParameterError("sub-generator: n_max must be >= 1");
    if (!(rate > 0)) throw ParameterError("sub-generator: rate must be > 0");
    SubGenerator q;
    q.n_max = n_max;
    q.rows.resize(n_max);
    q.exit.assign(n_max, 0.0);
    const auto& p = dist.pmf();
    for (std::size_t i = 1; i <= n_max; ++i) {
        for (std::size_t z = 0; z < p.size(); ++z) {
            if (z == 1 || p[z] == 0) continue;
            const double r = rate * static_cast<double>(i) * p[z];
            q.exit[i - 1] += r;
            const std::size_t j = i - 1 + z;
            if (j >= 1 && j <= n_max) q.rows[i - 1].push_back({j, r});
        }
    }
    return q;
}

SubGenerator SubGenerator::brw_projection(double lambda, std::size_t n_max) {
    if (!(lambda > 0)) throw ParameterError("brw projection: lambda must be > 0");
    return build(OffspringDist({1 / (1 + lambda), 0.0, lambda / (1 + lambda)}), n_max, 1 + lambda);
}

std::vector<double> SubGenerator::left_apply(const std::vector<double>& v) const {
    std::vector<double> out(n_max, 0.0);
    for (std::size_t i = 0; i < n_max; ++i) {
        out[i] -= v[i] * exit[i];
        for (const auto& e : rows[i]) out[e.to - 1] += v[i] * e.rate;
    }
    return out;
}

std::vector<double> SubGenerator::right_apply(const std::vector<double>& h) const {
    std::vector<double> out(n_max, 0.0);
    for (std::size_t i = 0; i < n_max; ++i) {
        double acc = -exit[i] * h[i];
        for (const auto& e : rows[i]) acc += e.rate * h[e.to - 1];
        out[i] = acc;
    }
    return out;
}

double SubGenerator::max_exit() const {
    return exit.empty() ? 0.0 : *std::max_element(exit.begin(), exit.end());
}

namespace {

double left_residual(const SubGenerator& q, const std::vector<double>& nu, double alpha) {
    const auto qn = q.left_apply(nu);
    double r = 0;
    for (std::size_t i = 0; i < nu.size(); ++i) r += std::abs(qn[i] + alpha * nu[i]);
    return r;
}

double right_residual(const SubGenerator& q, const std::vector<double>& h, double alpha) {
    const auto qh = q.right_apply(h);
    double r = 0, m = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        r = std::max(r, std::abs(qh[i] + alpha * h[i]));
        m = std::max(m, std::abs(h[i]));
    }
    return r / m;
}

} // namespace

SpectralSolution spectral_oracle(const SubGenerator& q, const SpectralOptions& opts) {
    if (q.n_max < 1) throw ParameterError("spectral_oracle: empty state space");
    if (!(opts.tol > 0)) throw ParameterError("spectral_oracle: tol must be > 0");
    const std::size_t n = q.n_max;
    const double c = 1.01 * q.max_exit() + 1e-12;
    if (!(c > 0)) throw ParameterError("spectral_oracle: no dynamics");
    const std::uint64_t check_every = 64;

    SpectralSolution sol;
    sol.n_max = n;

    // Left vector: nu <- nu (I + Q'/c), renormalized to sum 1.
    std::vector<double> nu(n, 1.0 / static_cast<double>(n));
    double alpha = 0;
    std::uint64_t it = 0;
    for (;;) {
        const auto qn = q.left_apply(nu);
        double sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            nu[i] += qn[i] / c;
            sum += nu[i];
        }
        for (auto& x : nu) x /= sum;
        ++it;
        if (it % check_every == 0 || it >= opts.max_iterations) {
            const double total = std::accumulate(nu.begin(), nu.end(), 0.0);
            const auto q2 = q.left_apply(nu);
            alpha = -std::accumulate(q2.begin(), q2.end(), 0.0) / total;
            sol.residual_left = left_residual(q, nu, alpha);
            if (sol.residual_left < opts.tol) break;
            if (it >= opts.max_iterations) {
                throw ConvergenceError("spectral_oracle: left iteration did not converge; residual " +
                                       std::to_string(sol.residual_left) + " after " + std::to_string(it) + " iterations");
            }
        }
    }
    sol.iterations = it;

    // Right vector: h <- (I + Q'/c) h, renormalized to max 1.
    std::vector<double> h(n, 1.0);
    it = 0;
    for (;;) {
        const auto qh = q.right_apply(h);
        double m = 0;
        for (std::size_t i = 0; i < n; ++i) {
            h[i] += qh[i] / c;
            m = std::max(m, std::abs(h[i]));
        }
        for (auto& x : h) x /= m;
        ++it;
        if (it % check_every == 0 || it >= opts.max_iterations) {
            sol.residual_right = right_residual(q, h, alpha);
            if (sol.residual_right < opts.tol) break;
            if (it >= opts.max_iterations) {
                throw ConvergenceError("spectral_oracle: right iteration did not converge; residual " +
                                       std::to_string(sol.residual_right) + " after " + std::to_string(it) + " iterations");
            }
        }
    }
    sol.iterations += it;

    double nh = 0;
    for (std::size_t i = 0; i < n; ++i) nh += nu[i] * h[i];
    for (auto& x : h) x /= nh;
    sol.alpha = alpha;
    sol.nu = std::move(nu);
    sol.h = std::move(h);
    sol.residual_left = left_residual(q, sol.nu, alpha);
    sol.residual_right = right_residual(q, sol.h, alpha);
    return sol;
}

SpectralSolution spectral_oracle(const OffspringDist& dist, std::size_t n_max, const SpectralOptions& opts,
                                 double rate) {
    if (!dist.subcritical()) throw ParameterError("spectral_oracle: offspring law is not subcritical");
    if (n_max < 10) throw ParameterError("spectral_oracle: n_max must be >= 10");
    return spectral_oracle(SubGenerator::build(dist, n_max, rate), opts);
}

std::string SpectralSolution::to_text() const {
    std::string out;
    char buf[128];
    std::snprintf(buf, sizeof buf, "n_max %zu\nalpha %.17g\nresidual_left %.17g\nresidual_right %.17g\n", n_max,
                  alpha, residual_left, residual_right);
    out += buf;
    for (std::size_t j = 1; j <= n_max; ++j) {
        std::snprintf(buf, sizeof buf, "%zu %.17g %.17g\n", j, nu[j - 1], h[j - 1]);
        out += buf;
    }
    return out;
}

SpectralSolution SpectralSolution::from_text(const std::string& text) {
    std::istringstream in(text);
    SpectralSolution s;
    std::string key;
    auto read = [&](const char* want, auto& value) {
        if (!(in >> key >> value) || key != want)
            throw ParameterError(std::string("spectral artifact: expected ") + want);
    };
    read("n_max", s.n_max);
    read("alpha", s.alpha);
    read("residual_left", s.residual_left);
    read("residual_right", s.residual_right);
    s.nu.resize(s.n_max);
    s.h.resize(s.n_max);
    for (std::size_t j = 1; j <= s.n_max; ++j) {
        std::size_t idx = 0;
        if (!(in >> idx >> s.nu[j - 1] >> s.h[j - 1]) || idx != j)
            throw ParameterError("spectral artifact: bad row " + std::to_string(j));
    }
    return s;
}

QTrajectory q_process_simulate(const SubGenerator& q, const SpectralSolution& sol, std::size_t initial, double t,
                               kernel::Stream& s, bool keep_path) {
    if (sol.n_max != q.n_max) throw ParameterError("q_process: generator and solution truncations differ");
    if (initial < 1 || initial > q.n_max)
        throw TruncationError("q_process: state " + std::to_string(initial) + " outside 1.." + std::to_string(q.n_max));
    const std::size_t n = q.n_max;
    // Transformed rows and their totals.
    std::vector<std::vector<double>> cum(n);
    std::vector<double> total(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& e : q.rows[i]) {
            total[i] += e.rate * sol.h[e.to - 1] / sol.h[i];
            cum[i].push_back(total[i]);
        }
    }
    QTrajectory tr;
    tr.occupation.assign(n, 0.0);
    std::size_t x = initial;
    double now = 0;
    if (keep_path) {
        tr.times.push_back(0);
        tr.states.push_back(x);
    }
    for (;;) {
        const double r = total[x - 1];
        const double dt = r > 0 ? kernel::sample_exponential(s, r) : t - now + 1;
        if (now + dt >= t) {
            tr.occupation[x - 1] += t - now;
            break;
        }
        tr.occupation[x - 1] += dt;
        now += dt;
        const double u = s.uniform() * r;
        const auto& c = cum[x - 1];
        const std::size_t k = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), u) - c.begin());
        x = q.rows[x - 1][std::min(k, c.size() - 1)].to;
        if (keep_path) {
            tr.times.push_back(now);
            tr.states.push_back(x);
        }
    }
    return tr;
}

} // namespace pdl::branching
