#pragma once
// Relative-entropy estimators and bound evaluators: the variational drift
// estimator along Foellmer trajectories, an independent FFT convolution
// oracle for product measures, the moment-grid entropy bound, the strong
// log-concavity bound, and two moment-identity residual monitors.

#include <cstdint>
#include <string>
#include <vector>

#include "cltlab/localization.hpp"
#include "cltlab/measure.hpp"

namespace cltlab {

struct DriftGrid {
  std::vector<double> times;
  std::vector<double> ev2;      // E |v_t|^2
  std::vector<double> stderr_;  // per time
  long n_traj = 0;
};

struct EntropyEstimate {
  double value = 0.0;       // clamped at 0
  double raw_value = 0.0;   // pre-clamp
  double ci = 0.0;          // 1 sigma (MC) or grid-doubling difference (oracle)
  std::string method;       // variational | fft-oracle | closed-form
  std::string reference;    // standard-gaussian | matched-gaussian
  double truncation_tail = 0.0;  // variational: last value x remaining measure
};

// Ent(N(0, s2) || N(0, 1)) in one dimension.
double gaussian_rel_entropy_1d(double s2);

// Simulates Foellmer trajectories accumulating the minimal-energy drift
// alongside; value = 1/2 trapezoid of E|v_t|^2 over the truncated grid plus a
// reported tail estimate. Requires a centered particle cloud; genuinely
// discrete measures are refused unless acknowledge_particle_approximation is
// set (their relative entropy to a Gaussian is infinite).
std::pair<EntropyEstimate, DriftGrid> estimate_entropy_variational(
    const DiscreteMeasure& m, const EngineConfig& cfg, long n_traj, std::uint64_t seed,
    int threads = 1, bool acknowledge_particle_approximation = false);

// Independent oracle for product measures: the one-dimensional density of
// the normalized n-fold sum via FFT self-convolution, then quadrature of
// p log(p/q) against the Gaussian with variance sigma_ref. For a product
// measure in dimension d the total is d times this value. grid_size >= 2^14.
EntropyEstimate entropy_oracle_product_fft(const Density1d& f, long n, double sigma_ref,
                                           int grid_size = 1 << 15);

// (1/n) * int_0^1 Var_t / ((1-t)^2 sigma_t^2) * (int_t^1 sigma_s^{-2} ds) dt
// with Var_t supplied per grid time; nested trapezoid with suffix sums.
double quant_entropy_bound_first(const MomentGrid& mg, const std::vector<double>& variance_grid,
                                 long n);

// 2 (d + 2 ent_x) / (sigma^4 n)
double strong_logconcave_bound(int d, double sigma, double ent_x, long n);

struct ResidualPoint {
  double t = 0.0;
  double residual = 0.0;
  double stderr_ = 0.0;
};

// E[Tr Gamma_t] versus d - (1-t)(d - Tr Sigma + E|v_t|^2), per shared grid time.
std::vector<ResidualPoint> gamma_representation_residual(const MomentGrid& mg,
                                                         const DriftGrid& dg,
                                                         const SymMatrix& sigma);

// Finite-difference derivative of (1-t) E[Gamma_t] against -E[Gamma_t^2],
// HS-norm residual per interior grid time.
std::vector<ResidualPoint> cov_derivative_residual(const MomentGrid& mg);

}  // namespace cltlab
