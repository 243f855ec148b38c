#include "pdl/harness/stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "pdl/kernel/errors.hpp"

namespace pdl::harness {

namespace {

constexpr double kNormTol = 1e-9;

void check_level(double level) {
    if (!(level > 0.0 && level < 1.0)) throw ParameterError("confidence level must be in (0, 1)");
}

FitResult fit_impl(const std::vector<double>& xs, const std::vector<double>& ys,
                   const std::vector<double>* w) {
    if (xs.size() != ys.size()) throw ParameterError("linear_fit: length mismatch");
    const std::size_t n = xs.size();
    std::set<double> distinct(xs.begin(), xs.end());
    if (n < 2 || distinct.size() < 2) throw ParameterError("linear_fit: need at least two distinct x values");

    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w ? (*w)[i] : 1.0;
        if (!(wi > 0.0)) throw ParameterError("linear_fit: weights must be positive");
        sw += wi;
        sx += wi * xs[i];
        sy += wi * ys[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w ? (*w)[i] : 1.0;
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += wi * dx * dx;
        sxy += wi * dx * dy;
        syy += wi * dy * dy;
    }
    FitResult f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w ? (*w)[i] : 1.0;
        const double r = ys[i] - f.intercept - f.slope * xs[i];
        rss += wi * r * r;
    }
    f.r2 = syy > 0 ? std::clamp(1.0 - rss / syy, 0.0, 1.0) : 1.0;
    if (w) {
        // Known-variance weights: standard errors come from the weights directly.
        f.se_slope = std::sqrt(1.0 / sxx);
        f.se_intercept = std::sqrt(1.0 / sw + mx * mx / sxx);
    } else if (n > 2) {
        const double s2 = rss / static_cast<double>(n - 2);
        f.se_slope = std::sqrt(s2 / sxx);
        f.se_intercept = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
    }
    return f;
}

} // namespace

std::pair<double, double> FitResult::slope_ci(double level) const {
    check_level(level);
    double q;
    if (n > 2) {
        boost::math::students_t t(static_cast<double>(n - 2));
        q = boost::math::quantile(t, 0.5 + level / 2.0);
    } else {
        q = normal_quantile(0.5 + level / 2.0);
    }
    return {slope - q * se_slope, slope + q * se_slope};
}

FitResult linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    return fit_impl(xs, ys, nullptr);
}

FitResult weighted_linear_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                              const std::vector<double>& weights) {
    if (weights.size() != xs.size()) throw ParameterError("weighted_linear_fit: length mismatch");
    return fit_impl(xs, ys, &weights);
}

double tv_distance(const Distribution& p, const Distribution& q) {
    auto check = [](const Distribution& d) {
        double s = 0;
        for (const auto& [k, v] : d) {
            if (v < 0 || !std::isfinite(v)) throw ParameterError("tv_distance: negative or non-finite mass");
            s += v;
        }
        if (std::abs(s - 1.0) > kNormTol) throw ParameterError("tv_distance: distribution is not normalized");
    };
    check(p);
    check(q);
    double acc = 0;
    for (const auto& [k, v] : p) {
        auto it = q.find(k);
        acc += std::abs(v - (it == q.end() ? 0.0 : it->second));
    }
    for (const auto& [k, v] : q)
        if (!p.count(k)) acc += v;
    return std::min(1.0, 0.5 * acc);
}

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
    Distribution a, b;
    for (std::size_t i = 0; i < p.size(); ++i) a[std::to_string(i)] = p[i];
    for (std::size_t i = 0; i < q.size(); ++i) b[std::to_string(i)] = q[i];
    return tv_distance(a, b);
}

Interval binomial_ci(std::uint64_t successes, std::uint64_t trials, double level) {
    check_level(level);
    if (trials == 0 || successes > trials) throw ParameterError("binomial_ci: invalid counts");
    const double z = normal_quantile(0.5 + level / 2.0);
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    Interval iv{std::max(0.0, centre - half), std::min(1.0, centre + half)};
    if (successes == 0) iv.lo = 0.0;
    if (successes == trials) iv.hi = 1.0;
    return iv;
}

MeanEstimate mean_ci(const std::vector<double>& xs, double level) {
    check_level(level);
    MeanEstimate m;
    m.n = xs.size();
    if (xs.empty()) throw InsufficientData("mean_ci: empty sample");
    double s = 0;
    for (double x : xs) s += x;
    m.mean = s / static_cast<double>(m.n);
    if (m.n > 1) {
        double ss = 0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.se = std::sqrt(ss / static_cast<double>(m.n - 1) / static_cast<double>(m.n));
    }
    const double z = normal_quantile(0.5 + level / 2.0);
    m.lo = m.mean - z * m.se;
    m.hi = m.mean + z * m.se;
    return m;
}

double normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal(), p);
}

double chi2_sf(double x, double dof) {
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), x));
}

Distribution normalize(const std::map<std::string, double>& counts) {
    double total = 0;
    for (const auto& [k, v] : counts) total += v;
    if (!(total > 0)) throw InsufficientData("normalize: zero total mass");
    Distribution d;
    for (const auto& [k, v] : counts) d[k] = v / total;
    return d;
}

} // namespace pdl::harness
