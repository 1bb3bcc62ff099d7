#pragma once
// Empirical Wasserstein-2 estimators: exact assignment (shortest augmenting
// path), brute-force permutation oracle for tiny inputs, debiased entropic
// regularization, the Gaussian closed form, and the coupling upper bound.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cltlab/embedding.hpp"
#include "cltlab/psd.hpp"

namespace cltlab {

// One column per point.
using PointSet = Eigen::MatrixXd;

struct W2Estimate {
  double value = 0.0;
  double ci_halfwidth = 0.0;  // one standard error
  std::string method;         // exact-assignment | brute-force | sinkhorn | coupling | gaussian-closed-form
  int k_x = 0, k_y = 0;
};

// Exact linear assignment on a dense cost matrix; returns the column matched
// to each row. O(n^3) successive shortest paths with potentials.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost, double* total_cost = nullptr);

// sqrt of the mean squared distance under the optimal pairing of two
// equal-size sets (|xs| = |ys| <= 4096); bootstrap standard error over the
// matched pair costs.
W2Estimate w2_exact_assignment(const PointSet& xs, const PointSet& ys,
                               std::uint64_t bootstrap_seed = 7, int bootstrap_reps = 200);

// Exhaustive permutation search, k <= 8. Oracle route for the solver above.
W2Estimate w2_brute_force(const PointSet& xs, const PointSet& ys);

// Debiased entropic value OT_e(x,y) - (OT_e(x,x) + OT_e(y,y))/2 with sharp
// transport costs; epsilon < 0 selects 0.05 * median pairwise cost.
W2Estimate w2_sinkhorn(const PointSet& xs, const PointSet& ys, double epsilon = -1.0,
                       int max_iters = 20000);

// Bures distance between centered Gaussians with the given covariances.
double w2_gaussian_closed_form(const SymMatrix& s1, const SymMatrix& s2);

// Exact W2 between a one-dimensional discrete law (atoms xs, weights ws) and
// N(0, sigma^2), by the closed-form quantile integral.
double w2_discrete_gaussian_1d(const std::vector<double>& xs, const std::vector<double>& ws,
                               double sigma);

// sqrt(mean |s_n - g|^2) over coupled pairs (any coupling upper-bounds W2).
W2Estimate w2_upper_from_coupling(const std::vector<CoupledPair>& pairs);

// Gaussian sampling helper for calibration experiments.
PointSet sample_gaussian(const SymMatrix& cov, int k, RngStream& rng);

}  // namespace cltlab
