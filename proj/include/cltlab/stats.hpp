#pragma once
// Small statistics toolbox shared by the estimators, experiments and tests.

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace cltlab {

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;  // standard error of the mean
  std::size_t count = 0;
};

MeanStderr mean_stderr(const std::vector<double>& xs);

double median(std::vector<double> xs);

// Wilson score interval for a binomial proportion; z is the normal quantile
// (2.5758 for 99%).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
Interval wilson_interval(std::size_t successes, std::size_t total, double z);

// Regularized upper incomplete gamma Q(a, x); series + continued fraction.
double regularized_gamma_q(double a, double x);

// Standard normal quantile (rational approximation polished by Newton steps).
double normal_quantile(double p);

// Chi-square goodness-of-fit p-value for observed counts against expected
// probabilities (cells with tiny expectation are pooled into the last cell).
double chi_square_gof_pvalue(const std::vector<std::int64_t>& observed,
                             const std::vector<double>& expected_probs);

// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

// Two-sample energy distance test: permutation p-value that X and Y come
// from the same law. Columns of x/y are points.
double energy_distance_pvalue(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                              int n_permutations, std::uint64_t seed);

}  // namespace cltlab
