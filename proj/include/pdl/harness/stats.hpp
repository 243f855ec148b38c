#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pdl::harness {

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double se_slope = 0.0;
    double se_intercept = 0.0;
    std::size_t n = 0;

    // Two-sided confidence interval for the slope from Student's t with n-2 dof.
    std::pair<double, double> slope_ci(double level = 0.95) const;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct MeanEstimate {
    double mean = 0.0;
    double se = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n = 0;
};

// Distribution over a countable encoding. Keys are state encodings.
using Distribution = std::map<std::string, double>;

FitResult linear_fit(const std::vector<double>& xs, const std::vector<double>& ys);

// Weighted least squares with weights 1/var_i; used to fit cell means.
FitResult weighted_linear_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                              const std::vector<double>& weights);

double tv_distance(const Distribution& p, const Distribution& q);
double tv_distance(const std::vector<double>& p, const std::vector<double>& q);

// Wilson score interval.
Interval binomial_ci(std::uint64_t successes, std::uint64_t trials, double level = 0.95);

// Normal-approximation interval for a sample mean.
MeanEstimate mean_ci(const std::vector<double>& xs, double level = 0.95);

double normal_quantile(double p);
// Upper tail probability of a chi-squared variable with `dof` degrees of freedom.
double chi2_sf(double x, double dof);

// Normalizes raw counts to a Distribution. Throws if the total is zero.
Distribution normalize(const std::map<std::string, double>& counts);

} // namespace pdl::harness
