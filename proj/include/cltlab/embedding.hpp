#pragma once
// Normalized sums of independent embeddings, the coupled Gaussian partner
// built from a shared Brownian reduction, the quadrature bound over the
// moment grid, and stopping-time statistics.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "cltlab/localization.hpp"
#include "cltlab/stats.hpp"

namespace cltlab {

struct CoupledPair {
  Eigen::VectorXd s_n;
  Eigen::VectorXd g;
  long n = 0;
  // direct normalized sum of final barycenters; equals s_n up to roundoff
  Eigen::VectorXd sn_direct;
};

struct TauTailRow {
  int i = 0;
  double threshold = 0.0;  // i * 2 beta^2
  double freq = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;  // Wilson 99%
  double bound = 1.0;               // 2^{-i}
};

struct TauStats {
  double mean_tau = 0.0;
  double stderr_ = 0.0;
  double beta = 0.0;
  long count = 0;
  std::vector<TauTailRow> tail;
};

struct BoundReportMain {
  double rhs_integral = 0.0;
  double rhs_se = 0.0;  // scatter of per-block evaluations
  std::vector<double> times, branch_n, branch_tail, integrand;
  std::optional<double> crossover_time;
  long n = 0;
};

Eigen::VectorXd sample_sn_iid(const DiscreteMeasure& m, long n, RngStream& rng);

// Batch of iid normalized-sum samples, one column per sample.
Eigen::MatrixXd sample_sn_iid_batch(const DiscreteMeasure& m, long n, int k,
                                    std::uint64_t seed, int threads = 1);

// Runs n trajectories in lockstep on the grid of `mg` (which must have been
// produced with the same policy/config); per step forms the root-mean-square
// coefficient and the reduced increment, and accumulates both integrals.
// Requires a centered measure.
CoupledPair sample_sn_coupled(const DiscreteMeasure& m, const Policy& policy, long n,
                              const MomentGrid& mg, const EngineConfig& cfg,
                              RngStream& rng);

std::vector<CoupledPair> sample_coupled_pairs(const DiscreteMeasure& m, const Policy& policy,
                                              long n, const MomentGrid& mg,
                                              const EngineConfig& cfg, std::uint64_t seed,
                                              int n_pairs, int threads = 1);

// Trapezoid integral of min(Tr(E[G^4] E[G^2]^+)/n, 4 Tr E[G^2]) over the grid.
BoundReportMain theorem_main_rhs(const MomentGrid& mg, long n);

// Sample mean of tau with dyadic tail table at thresholds i * 2 beta^2.
TauStats tau_statistics(const std::vector<TrajectoryRecord>& records, double beta);

}  // namespace cltlab
