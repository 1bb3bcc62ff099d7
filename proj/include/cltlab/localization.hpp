#pragma once
// Measure-valued localization dynamics on a finitely supported measure. The
// weight vector evolves by multiplicative exponential tilts driven by a
// Brownian increment; the barycenter a_t is the embedded martingale and
// A_t C_t its diffusion coefficient. Driving policies: Projection (C = A^+),
// Capped (C = min(A^+, I) until the operator norm of A first reaches 3 or
// t exceeds 1, then A^+), Foellmer (C = I/(1-t) on [0,1)).

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cltlab/measure.hpp"
#include "cltlab/psd.hpp"
#include "cltlab/rng.hpp"

namespace cltlab {

struct Policy {
  enum class Kind { Projection, Capped, Foellmer };
  Kind kind = Kind::Projection;
  double cap_threshold = 3.0;  // operator-norm trigger defining T
  double cap_time = 1.0;       // T = min(cap_time, first crossing)

  static Policy projection() { return {Kind::Projection}; }
  static Policy capped() { return {Kind::Capped}; }
  static Policy foellmer() { return {Kind::Foellmer}; }
  const char* name() const;
};

struct EngineConfig {
  double dt_scale = 1e-3;           // Projection/Capped: dt = dt_scale * beta^2
  double du = 1e-3;                 // Foellmer: uniform spacing in u = -ln(1-t)
  double foellmer_t_max = 1.0 - 1e-4;
  double collapse_weight = 1.0 - 1e-6;  // max-weight collapse threshold
  double collapse_trace = 1e-10;        // Tr A collapse threshold
  long max_steps = 1L << 20;
  int renorm_every = 1;             // renormalize the simplex every k steps
  bool store_full_path = false;
  bool track_rank = true;           // extra eigendecomposition under Foellmer
  double t_end_factor = 24.0;       // grid horizon = factor * beta^2 (Projection/Capped)
  std::uint64_t seed = 1;

  // Endgame guard. Once the per-step tilt exponent variance max_i |C(x_i-a)|^2 dt
  // exceeds this cap the multiplicative update is no longer a faithful
  // discretization; the winner is then resolved by optional stopping (atom i
  // wins with its current weight) and E[remaining time | state] = Tr A is
  // added to tau. Set to +inf to keep the raw update (the coupled sampler
  // does, to preserve s_n = (1/sqrt n) sum a_tau exactly).
  double endgame_exponent_cap = 4.0;

  void validate() const;
};

struct TrajectoryState {
  double t = 0.0;
  long step = 0;
  Eigen::VectorXd weights;
  Eigen::VectorXd a;
  Eigen::MatrixXd A;
  Eigen::MatrixXd C;
  Eigen::MatrixXd Gamma;          // A_t C_t; zero after collapse
  Eigen::VectorXd eig_A;          // ascending; empty when not computed
  int rank = -1;                  // eigenvalues above cutoff; -1 if untracked
  std::optional<double> T_hit;    // Capped: first time operator norm >= threshold
  bool collapsed = false;
  double tau_extra = 0.0;         // optional-stopping residual added at endgame resolution
  bool endgame_resolved = false;
  const DiscreteMeasure* measure = nullptr;
};

struct StepSample {
  double t;  // time after the step
  Eigen::VectorXd weights;
  Eigen::VectorXd dB;
  double dt;
};

struct TrajectoryDiagnostics {
  double max_gamma_idempotency_err = 0.0;  // Projection: ||G^2 - G||_HS
  double max_gamma_op_norm = 0.0;          // Capped monitor, expect <= 3 + 1e-6
  int rank_increases = 0;
  double max_simplex_err = 0.0;
  double final_max_weight = 0.0;
  double embed_snap_dist = 0.0;            // |a_tau - snapped atom|
  double max_foellmer_gamma_excess = 0.0;  // max eig(Gamma) - 1/t (monitor)
};

struct TrajectoryRecord {
  Policy policy;
  bool collapsed = false;
  double tau = 0.0;
  Eigen::VectorXd embedded_point;
  long steps = 0;
  std::optional<double> T_hit;
  std::string failure;  // empty on success; non-collapse is reported here
  TrajectoryDiagnostics diag;
  std::vector<StepSample> path;  // populated when cfg.store_full_path
};

struct TimeGrid {
  std::vector<double> t;
  std::size_t size() const { return t.size(); }
};

// Grid used by moment estimation and coupled sampling; matches the engine's
// internal step times exactly.
TimeGrid make_step_grid(const Policy& policy, const EngineConfig& cfg, double beta);

double measure_radius(const DiscreteMeasure& m);

TrajectoryState init_trajectory(const DiscreteMeasure& m, const Policy& policy,
                                const EngineConfig& cfg);

// One multiplicative-exponential update with frozen coefficients:
// w_i <- w_i * exp(<C(x_i - a), dB> - 0.5 |C(x_i - a)|^2 dt), renormalized.
// dB must carry the statistics of sqrt(dt) * standard normal. Stepping a
// collapsed state returns it unchanged.
TrajectoryState step(const TrajectoryState& state, const Policy& policy,
                     const Eigen::VectorXd& dB, double dt,
                     const EngineConfig& cfg = EngineConfig{});

// Hooks for Ito-style accumulation: `pre` sees the state at the left endpoint
// together with the increment about to be applied; `post` sees the state
// after the step (and once at t = 0) and may stop the run by returning false.
using PreStepCb = std::function<void(const TrajectoryState&, const Eigen::VectorXd& dB, double dt)>;
using PostStepCb = std::function<bool(const TrajectoryState&)>;

TrajectoryRecord simulate_trajectory(const DiscreteMeasure& m, const Policy& policy,
                                     const EngineConfig& cfg, RngStream& rng,
                                     const PreStepCb& pre = nullptr,
                                     const PostStepCb& post = nullptr);

// Runs until collapse (or the Foellmer horizon / max_steps, reported in
// `failure` if collapse was not reached).
TrajectoryRecord run_trajectory(const DiscreteMeasure& m, const Policy& policy,
                                const EngineConfig& cfg, RngStream& rng);

// ---------------------------------------------------------------------------
// Exact-tilt Foellmer integrator. Maintains the linear tilt theta_t with
// d theta = a_t/(1-t)^2 dt + dB/(1-t); weights are recovered in closed form
// w_i(t) ∝ w_i(0) exp(<theta, x_i> - q(t) |x_i|^2 / 2) with the quadratic
// coefficient q(t) = t/(1-t) carried analytically.

double foellmer_quadratic_coeff(double t);

struct TiltState {
  double t = 0.0;
  long step = 0;
  Eigen::VectorXd theta;
  Eigen::VectorXd weights;
  Eigen::VectorXd a;
  Eigen::MatrixXd A;      // filled when track_moments
  Eigen::MatrixXd Gamma;  // A / (1-t)
  bool collapsed = false;
  bool track_moments = false;
  const DiscreteMeasure* measure = nullptr;

  // cached per-measure tables
  Eigen::VectorXd log_w0;
  Eigen::VectorXd atom_sqnorm;
};

TiltState init_foellmer_tilt(const DiscreteMeasure& m, const EngineConfig& cfg,
                             bool track_moments);

// Advances theta with an Euler update over [state.t, t_next] and rebuilds the
// weights in closed form at t_next.
void foellmer_tilt_step(TiltState& state, const Eigen::VectorXd& dB, double t_next,
                        const EngineConfig& cfg);

using TiltPreStepCb = std::function<void(const TiltState&, const Eigen::VectorXd& dB, double dt)>;
using TiltPostStepCb = std::function<bool(const TiltState&)>;

TrajectoryRecord simulate_foellmer_tilt(const DiscreteMeasure& m, const EngineConfig& cfg,
                                        RngStream& rng, bool track_moments,
                                        const TiltPreStepCb& pre = nullptr,
                                        const TiltPostStepCb& post = nullptr);

TrajectoryRecord run_foellmer_tilt(const DiscreteMeasure& m, const EngineConfig& cfg,
                                   RngStream& rng);

// ---------------------------------------------------------------------------
// Monte Carlo moments of Gamma_t on a fixed grid (zeros after collapse).

struct MomentGrid {
  Policy policy;
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> e_gamma, e_gamma2, e_gamma4;
  std::vector<double> sigma;  // min eigenvalue of E[Gamma_t]
  std::vector<double> se_tr_gamma, se_tr_gamma2, se_tr_gamma4;
  long n_traj = 0;
  int n_blocks = 0;

  // per-block sums, kept for batched uncertainty of derived quantities
  std::vector<std::vector<Eigen::MatrixXd>> block_gamma, block_gamma2, block_gamma4;
  std::vector<long> block_count;

  int dim() const { return times.empty() ? 0 : static_cast<int>(e_gamma[0].rows()); }
  // E[Tr((Gamma^2 - E[Gamma^2])^2)] per time, from the fourth/second moments.
  std::vector<double> variance_gamma2_trace() const;
};

MomentGrid gamma_moments(const DiscreteMeasure& m, const Policy& policy,
                         const EngineConfig& cfg, const TimeGrid& grid, long n_traj,
                         std::uint64_t seed, int threads = 1, int n_blocks = 8);

// ---------------------------------------------------------------------------
// Path-wise residual of the covariance evolution identity: compares the
// realized increment of A_t against the third-moment martingale term minus
// the A C^2 A drift, averaged over the stored path.

struct DAtResidual {
  double mean_residual = 0.0;
  std::vector<double> per_step;
};

DAtResidual dAt_residual(const DiscreteMeasure& m, const TrajectoryRecord& record);

}  // namespace cltlab
