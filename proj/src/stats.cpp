#include "cltlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cltlab/rng.hpp"

namespace cltlab {

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr out;
  out.count = xs.size();
  if (xs.empty()) return out;
  double s = 0.0;
  for (double x : xs) s += x;
  out.mean = s / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  out.stderr_ = std::sqrt(var / static_cast<double>(xs.size()));
  return out;
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median: empty input");
  const std::size_t mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  double hi = xs[mid];
  if (xs.size() % 2 == 1) return hi;
  double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

Interval wilson_interval(std::size_t successes, std::size_t total, double z) {
  if (total == 0) throw std::invalid_argument("wilson_interval: total == 0");
  const double n = static_cast<double>(total);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace {

double gamma_p_series(double a, double x) {
  double sum = 1.0 / a;
  double term = sum;
  for (int k = 1; k < 10000; ++k) {
    term *= x / (a + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
  // Lentz's algorithm for the continued fraction of Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("regularized_gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_contfrac(a, x);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p in (0,1)");
  // Acklam's rational approximation.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  // Two Newton polish steps against erfc.
  for (int it = 0; it < 2; ++it) {
    const double err = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    if (pdf > 0.0) x -= err / pdf;
  }
  return x;
}

double chi_square_gof_pvalue(const std::vector<std::int64_t>& observed,
                             const std::vector<double>& expected_probs) {
  if (observed.size() != expected_probs.size() || observed.empty())
    throw std::invalid_argument("chi_square_gof_pvalue: size mismatch");
  std::int64_t total = 0;
  for (auto o : observed) total += o;
  if (total <= 0) throw std::invalid_argument("chi_square_gof_pvalue: no observations");

  // Pool cells with expected count below 5 to keep the chi-square
  // approximation honest.
  std::vector<double> exp_counts;
  std::vector<double> obs_counts;
  double pool_exp = 0.0, pool_obs = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = expected_probs[i] * static_cast<double>(total);
    if (e < 5.0) {
      pool_exp += e;
      pool_obs += static_cast<double>(observed[i]);
    } else {
      exp_counts.push_back(e);
      obs_counts.push_back(static_cast<double>(observed[i]));
    }
  }
  if (pool_exp > 0.0) {
    exp_counts.push_back(pool_exp);
    obs_counts.push_back(pool_obs);
  }
  if (exp_counts.size() < 2) return 1.0;

  double stat = 0.0;
  for (std::size_t i = 0; i < exp_counts.size(); ++i) {
    const double diff = obs_counts[i] - exp_counts[i];
    stat += diff * diff / exp_counts[i];
  }
  const double dof = static_cast<double>(exp_counts.size() - 1);
  return regularized_gamma_q(0.5 * dof, 0.5 * stat);
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ls_slope: bad input");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("ls_slope: degenerate x");
  return sxy / sxx;
}

namespace {

double energy_statistic(const Eigen::MatrixXd& dist, const std::vector<int>& label, int nx,
                        int ny) {
  // dist is the pooled pairwise distance matrix; label[i] == 0 marks x.
  double dxy = 0.0, dxx = 0.0, dyy = 0.0;
  const int n = static_cast<int>(label.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = dist(i, j);
      if (label[i] != label[j])
        dxy += d;
      else if (label[i] == 0)
        dxx += d;
      else
        dyy += d;
    }
  }
  const double ex = static_cast<double>(nx);
  const double ey = static_cast<double>(ny);
  return 2.0 * dxy / (ex * ey) - 2.0 * dxx / (ex * ex) - 2.0 * dyy / (ey * ey);
}

}  // namespace

double energy_distance_pvalue(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                              int n_permutations, std::uint64_t seed) {
  if (x.rows() != y.rows()) throw std::invalid_argument("energy_distance_pvalue: dim mismatch");
  const int nx = static_cast<int>(x.cols());
  const int ny = static_cast<int>(y.cols());
  const int n = nx + ny;
  Eigen::MatrixXd pooled(x.rows(), n);
  pooled << x, y;
  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double d = (pooled.col(i) - pooled.col(j)).norm();
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  std::vector<int> label(static_cast<std::size_t>(n), 0);
  for (int i = nx; i < n; ++i) label[static_cast<std::size_t>(i)] = 1;
  const double observed = energy_statistic(dist, label, nx, ny);

  RngStream rng(derive_seed(seed, 0xE17A));
  int at_least = 1;  // the observed labelling counts as one permutation
  std::vector<int> perm = label;
  for (int r = 0; r < n_permutations; ++r) {
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.raw() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    if (energy_statistic(dist, perm, nx, ny) >= observed) ++at_least;
  }
  return static_cast<double>(at_least) / static_cast<double>(n_permutations + 1);
}

}  // namespace cltlab
