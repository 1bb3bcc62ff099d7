#include "cltlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cltlab/stats.hpp"

namespace cltlab {

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost, double* total_cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n || n == 0) throw std::invalid_argument("solve_assignment: square matrix required");
  const double inf = std::numeric_limits<double>::infinity();

  // Successive shortest augmenting paths with dual potentials (u, v).
  // p[j] is the row currently matched to column j; column n is a sentinel.
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, -1);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);

  for (int i = 0; i < n; ++i) {
    p[static_cast<std::size_t>(n)] = i;
    int j0 = n;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = -1;
      for (int j = 0; j < n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != -1);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != n);
  }

  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] = j;
    total += cost(p[static_cast<std::size_t>(j)], j);
  }
  if (total_cost) *total_cost = total;
  return row_to_col;
}

namespace {

Eigen::MatrixXd squared_cost(const PointSet& xs, const PointSet& ys) {
  const int kx = static_cast<int>(xs.cols());
  const int ky = static_cast<int>(ys.cols());
  Eigen::MatrixXd cost(kx, ky);
  for (int i = 0; i < kx; ++i)
    for (int j = 0; j < ky; ++j) cost(i, j) = (xs.col(i) - ys.col(j)).squaredNorm();
  return cost;
}

}  // namespace

W2Estimate w2_exact_assignment(const PointSet& xs, const PointSet& ys,
                               std::uint64_t bootstrap_seed, int bootstrap_reps) {
  if (xs.rows() != ys.rows()) throw std::invalid_argument("w2_exact_assignment: dim mismatch");
  if (xs.cols() != ys.cols()) throw std::invalid_argument("w2_exact_assignment: size mismatch");
  const int k = static_cast<int>(xs.cols());
  if (k == 0) throw std::invalid_argument("w2_exact_assignment: empty input");
  if (k > 4096)
    throw std::invalid_argument("w2_exact_assignment: size over cap, use w2_sinkhorn instead");

  const Eigen::MatrixXd cost = squared_cost(xs, ys);
  double total = 0.0;
  const std::vector<int> match = solve_assignment(cost, &total);

  std::vector<double> pair_costs(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) pair_costs[static_cast<std::size_t>(i)] = cost(i, match[static_cast<std::size_t>(i)]);

  W2Estimate out;
  out.method = "exact-assignment";
  out.k_x = k;
  out.k_y = k;
  out.value = std::sqrt(total / static_cast<double>(k));

  // Bootstrap standard error over resampled matched-pair costs.
  if (bootstrap_reps > 1) {
    RngStream rng(derive_seed(bootstrap_seed, 0xB007));
    std::vector<double> reps;
    reps.reserve(static_cast<std::size_t>(bootstrap_reps));
    for (int r = 0; r < bootstrap_reps; ++r) {
      double s = 0.0;
      for (int i = 0; i < k; ++i)
        s += pair_costs[static_cast<std::size_t>(rng.raw() % static_cast<std::uint64_t>(k))];
      reps.push_back(std::sqrt(s / static_cast<double>(k)));
    }
    double mean = 0.0;
    for (double rv : reps) mean += rv;
    mean /= static_cast<double>(reps.size());
    double ss = 0.0;
    for (double rv : reps) ss += (rv - mean) * (rv - mean);
    out.ci_halfwidth = std::sqrt(ss / static_cast<double>(reps.size() - 1));
  }
  return out;
}

W2Estimate w2_brute_force(const PointSet& xs, const PointSet& ys) {
  if (xs.rows() != ys.rows() || xs.cols() != ys.cols())
    throw std::invalid_argument("w2_brute_force: shape mismatch");
  const int k = static_cast<int>(xs.cols());
  if (k < 1 || k > 8) throw std::invalid_argument("w2_brute_force: k must be in [1,8]");
  const Eigen::MatrixXd cost = squared_cost(xs, ys);
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += cost(i, perm[static_cast<std::size_t>(i)]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  W2Estimate out;
  out.method = "brute-force";
  out.k_x = k;
  out.k_y = k;
  out.value = std::sqrt(best / static_cast<double>(k));
  return out;
}

namespace {

// Sharp entropic transport cost <pi, C> between uniform empirical measures,
// log-domain Sinkhorn with epsilon scaling (annealing from a coarse epsilon
// keeps the iteration count manageable at small targets). Throws on
// non-convergence.
double sinkhorn_sharp_cost(const Eigen::MatrixXd& cost, double epsilon, int max_iters) {
  const int kx = static_cast<int>(cost.rows());
  const int ky = static_cast<int>(cost.cols());
  const double la = -std::log(static_cast<double>(kx));
  const double lb = -std::log(static_cast<double>(ky));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(kx);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(ky);

  auto soft_min_rows = [&](double eps, const Eigen::VectorXd& gg, Eigen::VectorXd& out) {
    // out_i = -eps * log sum_j exp((gg_j - C_ij)/eps + lb)
    for (int i = 0; i < kx; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < ky; ++j) mx = std::max(mx, (gg[j] - cost(i, j)) / eps);
      double s = 0.0;
      for (int j = 0; j < ky; ++j) s += std::exp((gg[j] - cost(i, j)) / eps - mx);
      out[i] = -eps * (mx + std::log(s) + lb);
    }
  };
  auto soft_min_cols = [&](double eps, const Eigen::VectorXd& ff, Eigen::VectorXd& out) {
    for (int j = 0; j < ky; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < kx; ++i) mx = std::max(mx, (ff[i] - cost(i, j)) / eps);
      double s = 0.0;
      for (int i = 0; i < kx; ++i) s += std::exp((ff[i] - cost(i, j)) / eps - mx);
      out[j] = -eps * (mx + std::log(s) + la);
    }
  };

  // annealing stages down to the target epsilon
  const double eps_start = std::max(epsilon, cost.maxCoeff() * 0.1 + 1e-30);
  for (double eps = eps_start; eps > epsilon * 1.0001; eps = std::max(epsilon, eps * 0.5)) {
    for (int it = 0; it < 40; ++it) {
      soft_min_rows(eps, g, f);
      soft_min_cols(eps, f, g);
    }
    if (eps == epsilon) break;
  }

  // At small epsilon the raw iteration approaches the marginal tolerance in a
  // power-law crawl, so the plan is rounded to exact marginals once the
  // pre-rounding violation is small; the rounding moves the sharp cost by at
  // most violation * max cost.
  bool converged = false;
  for (int it = 0; it < max_iters; ++it) {
    soft_min_rows(epsilon, g, f);
    soft_min_cols(epsilon, f, g);
    double violation = 0.0;
    for (int i = 0; i < kx; ++i) {
      double row = 0.0;
      for (int j = 0; j < ky; ++j)
        row += std::exp((f[i] + g[j] - cost(i, j)) / epsilon + la + lb);
      violation += std::abs(row - std::exp(la));
    }
    if (violation < 1e-6) {
      converged = true;
      break;
    }
  }
  if (!converged) throw std::runtime_error("w2_sinkhorn: no convergence within max_iters");

  Eigen::MatrixXd plan(kx, ky);
  for (int i = 0; i < kx; ++i)
    for (int j = 0; j < ky; ++j)
      plan(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / epsilon + la + lb);

  // Marginal rounding: scale rows then columns into the targets and spread
  // the residual mass rank-one; the returned plan has exact marginals (L1
  // violation at rounding-error level, far below 1e-8).
  const double a = std::exp(la), b = std::exp(lb);
  for (int i = 0; i < kx; ++i) {
    const double r = plan.row(i).sum();
    if (r > a) plan.row(i) *= a / r;
  }
  Eigen::VectorXd col_deficit(ky);
  for (int j = 0; j < ky; ++j) {
    const double c = plan.col(j).sum();
    if (c > b) plan.col(j) *= b / c;
  }
  Eigen::VectorXd row_err(kx);
  for (int i = 0; i < kx; ++i) row_err[i] = a - plan.row(i).sum();
  for (int j = 0; j < ky; ++j) col_deficit[j] = b - plan.col(j).sum();
  const double deficit = row_err.sum();
  if (deficit > 0.0) plan += (row_err / deficit) * col_deficit.transpose();

  double violation_after = 0.0;
  for (int i = 0; i < kx; ++i) violation_after += std::abs(plan.row(i).sum() - a);
  for (int j = 0; j < ky; ++j) violation_after += std::abs(plan.col(j).sum() - b);
  if (violation_after >= 1e-8)
    throw std::runtime_error("w2_sinkhorn: rounded plan violates marginals");

  return (plan.array() * cost.array()).sum();
}

}  // namespace

W2Estimate w2_sinkhorn(const PointSet& xs, const PointSet& ys, double epsilon, int max_iters) {
  if (xs.rows() != ys.rows()) throw std::invalid_argument("w2_sinkhorn: dim mismatch");
  const Eigen::MatrixXd cxy = squared_cost(xs, ys);
  if (epsilon <= 0.0) {
    std::vector<double> all(cxy.data(), cxy.data() + cxy.size());
    epsilon = 0.05 * std::max(median(std::move(all)), 1e-12);
  }
  const double oxy = sinkhorn_sharp_cost(cxy, epsilon, max_iters);
  const double oxx = sinkhorn_sharp_cost(squared_cost(xs, xs), epsilon, max_iters);
  const double oyy = sinkhorn_sharp_cost(squared_cost(ys, ys), epsilon, max_iters);
  W2Estimate out;
  out.method = "sinkhorn";
  out.k_x = static_cast<int>(xs.cols());
  out.k_y = static_cast<int>(ys.cols());
  out.value = std::sqrt(std::max(0.0, oxy - 0.5 * (oxx + oyy)));
  return out;
}

double w2_gaussian_closed_form(const SymMatrix& s1, const SymMatrix& s2) {
  const Eigen::MatrixXd root2 = psd_sqrt(s2).mat();
  const Eigen::MatrixXd inner = root2 * s1.mat() * root2;
  const double cross = psd_sqrt(SymMatrix(inner)).mat().trace();
  const double val2 = s1.mat().trace() + s2.mat().trace() - 2.0 * cross;
  return std::sqrt(std::max(0.0, val2));
}

double w2_discrete_gaussian_1d(const std::vector<double>& xs, const std::vector<double>& ws,
                               double sigma) {
  if (xs.size() != ws.size() || xs.empty())
    throw std::invalid_argument("w2_discrete_gaussian_1d: bad input");
  if (!(sigma > 0.0)) throw std::invalid_argument("w2_discrete_gaussian_1d: sigma > 0");
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return xs[i] < xs[j]; });

  // In 1-d the optimal coupling is quantile matching; on each weight slab the
  // discrete quantile is constant, so the integral has a closed form with
  // phi/Phi at the slab boundaries.
  const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * M_PI);
  auto phi = [&](double z) { return std::exp(-0.5 * z * z) * inv_sqrt2pi; };
  double cum = 0.0;
  double z_lo = -std::numeric_limits<double>::infinity();
  double phi_lo = 0.0, zphi_lo = 0.0;
  double total = 0.0;
  for (std::size_t idx = 0; idx < order.size(); ++idx) {
    const double w = ws[order[idx]];
    if (w <= 0.0) continue;
    const double x = xs[order[idx]];
    cum = std::min(1.0, cum + w);
    const bool last = idx + 1 == order.size() || cum >= 1.0 - 1e-15;
    const double z_hi = last ? std::numeric_limits<double>::infinity() : normal_quantile(cum);
    const double phi_hi = last ? 0.0 : phi(z_hi);
    const double zphi_hi = last ? 0.0 : z_hi * phi_hi;
    // int (x - sigma z)^2 dPhi(z) over [z_lo, z_hi]
    total += w * x * x - 2.0 * sigma * x * (phi_lo - phi_hi) +
             sigma * sigma * ((zphi_lo - zphi_hi) + w);
    z_lo = z_hi;
    phi_lo = phi_hi;
    zphi_lo = zphi_hi;
    if (last) break;
  }
  (void)z_lo;
  return std::sqrt(std::max(0.0, total));
}

W2Estimate w2_upper_from_coupling(const std::vector<CoupledPair>& pairs) {
  if (pairs.size() < 100)
    throw std::invalid_argument("w2_upper_from_coupling: need at least 100 pairs");
  std::vector<double> costs;
  costs.reserve(pairs.size());
  for (const auto& p : pairs) costs.push_back((p.s_n - p.g).squaredNorm());
  const MeanStderr ms = mean_stderr(costs);
  W2Estimate out;
  out.method = "coupling";
  out.k_x = static_cast<int>(pairs.size());
  out.k_y = out.k_x;
  out.value = std::sqrt(std::max(0.0, ms.mean));
  out.ci_halfwidth = out.value > 0.0 ? ms.stderr_ / (2.0 * out.value) : std::sqrt(ms.stderr_);
  return out;
}

PointSet sample_gaussian(const SymMatrix& cov, int k, RngStream& rng) {
  const Eigen::MatrixXd root = psd_sqrt(cov).mat();
  PointSet out(cov.dim(), k);
  for (int i = 0; i < k; ++i) out.col(i) = root * rng.normal_vector(cov.dim());
  return out;
}

}  // namespace cltlab
