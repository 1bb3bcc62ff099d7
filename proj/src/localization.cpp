#include "cltlab/localization.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "cltlab/parallel.hpp"

namespace cltlab {

const char* Policy::name() const {
  switch (kind) {
    case Kind::Projection: return "projection";
    case Kind::Capped: return "capped";
    case Kind::Foellmer: return "foellmer";
  }
  return "?";
}

void EngineConfig::validate() const {
  if (dt_scale <= 0.0 || du <= 0.0) throw std::invalid_argument("EngineConfig: step sizes");
  if (!(foellmer_t_max > 0.0 && foellmer_t_max < 1.0))
    throw std::invalid_argument("EngineConfig: foellmer_t_max");
  if (!(collapse_weight > 0.0 && collapse_weight < 1.0) || collapse_trace <= 0.0)
    throw std::invalid_argument("EngineConfig: collapse thresholds");
  if (max_steps < 1000) throw std::invalid_argument("EngineConfig: max_steps >= 1e3 required");
  if (renorm_every < 1) throw std::invalid_argument("EngineConfig: renorm_every");
}

double measure_radius(const DiscreteMeasure& m) {
  double r = 0.0;
  for (int i = 0; i < m.size(); ++i) r = std::max(r, m.atoms().col(i).norm());
  return r;
}

namespace {

double uniform_dt(const EngineConfig& cfg, double beta) {
  const double b2 = beta > 0.0 ? beta * beta : 1.0;
  return cfg.dt_scale * b2;
}

double foellmer_time(const EngineConfig& cfg, long j) {
  const double t = 1.0 - std::exp(-cfg.du * static_cast<double>(j));
  return std::min(t, cfg.foellmer_t_max);
}

void compute_mean_cov(const DiscreteMeasure& m, const Eigen::VectorXd& w,
                      Eigen::VectorXd& a, Eigen::MatrixXd& A) {
  const auto& X = m.atoms();
  const int d = static_cast<int>(X.rows());
  a.noalias() = X * w;
  A.setZero(d, d);
  for (int i = 0; i < X.cols(); ++i) {
    const Eigen::VectorXd c = X.col(i) - a;
    A.noalias() += w[i] * c * c.transpose();
  }
}

// Recomputes a, A, C, Gamma, rank, T_hit, collapse flag from the weights.
void refresh_state(TrajectoryState& s, const Policy& p, const EngineConfig& cfg) {
  compute_mean_cov(*s.measure, s.weights, s.a, s.A);
  const int d = static_cast<int>(s.A.rows());
  const double tr_A = s.A.trace();

  const bool need_eig = p.kind != Policy::Kind::Foellmer || cfg.track_rank;
  if (need_eig) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.A);
    s.eig_A = es.eigenvalues();
    const double op = s.eig_A.cwiseAbs().maxCoeff();
    const double cutoff = default_cutoff(op);
    int rank = 0;
    for (int i = 0; i < d; ++i)
      if (s.eig_A[i] > cutoff) ++rank;
    s.rank = rank;

    if (p.kind != Policy::Kind::Foellmer) {
      if (p.kind == Policy::Kind::Capped && !s.T_hit && s.eig_A.maxCoeff() >= p.cap_threshold)
        s.T_hit = s.t;
      const bool use_cap =
          p.kind == Policy::Kind::Capped &&
          s.t <= std::min(p.cap_time, s.T_hit ? *s.T_hit : std::numeric_limits<double>::max());
      Eigen::VectorXd c_eig(d), g_eig(d);
      for (int i = 0; i < d; ++i) {
        const double l = s.eig_A[i];
        if (l <= cutoff) {
          c_eig[i] = 0.0;
          g_eig[i] = 0.0;
        } else if (p.kind == Policy::Kind::Capped && use_cap) {
          c_eig[i] = std::min(1.0 / l, 1.0);
          g_eig[i] = std::min(l, 1.0);
        } else {
          c_eig[i] = 1.0 / l;
          g_eig[i] = 1.0;
        }
      }
      const Eigen::MatrixXd& Q = es.eigenvectors();
      s.C.noalias() = Q * c_eig.asDiagonal() * Q.transpose();
      s.Gamma.noalias() = Q * g_eig.asDiagonal() * Q.transpose();
    }
  }
  if (p.kind == Policy::Kind::Foellmer) {
    const double om = 1.0 - s.t;
    if (om <= 0.0) throw std::domain_error("refresh_state: Foellmer policy at t >= 1");
    s.C = Eigen::MatrixXd::Identity(d, d) / om;
    s.Gamma = s.A / om;
  }

  const double max_w = s.weights.maxCoeff();
  if (max_w >= cfg.collapse_weight || tr_A <= cfg.collapse_trace) {
    s.collapsed = true;
    s.Gamma.setZero(d, d);
    s.C.setZero(d, d);
  }
}

void advance_in_place(TrajectoryState& s, const Policy& p, const EngineConfig& cfg,
                      const Eigen::VectorXd& dB, double dt, double t_next) {
  const auto& X = s.measure->atoms();
  const int k = static_cast<int>(X.cols());
  const bool scalar_c = p.kind == Policy::Kind::Foellmer;
  const double c_scalar = scalar_c ? 1.0 / (1.0 - s.t) : 0.0;

  Eigen::VectorXd expo(k);
  double stiffness = 0.0;  // max exponent variance over live atoms
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd y;
    if (scalar_c)
      y = c_scalar * (X.col(i) - s.a);
    else
      y.noalias() = s.C * (X.col(i) - s.a);
    const double y2dt = y.squaredNorm() * dt;
    if (s.weights[i] > 1e-12) stiffness = std::max(stiffness, y2dt);
    expo[i] = y.dot(dB) - 0.5 * y2dt;
  }

  if (stiffness > cfg.endgame_exponent_cap) {
    // The multiplicative update is no longer faithful at this tilt scale.
    // Resolve by optional stopping: atom i wins with probability w_i, and the
    // expected remaining time is Tr A (pseudo-inverse policies; the run ends
    // at t = 1 under the Foellmer policy).
    const double z = dB[0] / std::sqrt(dt);
    const double u = 0.5 * std::erfc(-z / std::sqrt(2.0));
    double acc = 0.0;
    int winner = k - 1;
    for (int i = 0; i < k; ++i) {
      acc += s.weights[i];
      if (u <= acc) {
        winner = i;
        break;
      }
    }
    s.tau_extra = scalar_c ? std::max(0.0, 1.0 - t_next) : s.A.trace();
    s.endgame_resolved = true;
    s.weights.setZero();
    s.weights[winner] = 1.0;
    ++s.step;
    s.t = t_next;
    refresh_state(s, p, cfg);
    return;
  }

  const double max_e = expo.maxCoeff();
  if (!std::isfinite(max_e)) throw std::runtime_error("step: non-finite tilt exponent");
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    s.weights[i] *= std::exp(expo[i] - max_e);
    sum += s.weights[i];
  }
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw std::runtime_error("step: weight underflow (dt too large for this state)");
  ++s.step;
  if (s.step % cfg.renorm_every == 0) s.weights /= sum;
  s.t = t_next;
  refresh_state(s, p, cfg);
}

int argmax_weight(const Eigen::VectorXd& w) {
  int idx = 0;
  w.maxCoeff(&idx);
  return idx;
}

void update_diagnostics(TrajectoryDiagnostics& diag, const TrajectoryState& s,
                        const Policy& p, int prev_rank) {
  if (prev_rank >= 0 && s.rank >= 0 && s.rank > prev_rank) ++diag.rank_increases;
  if (s.collapsed) return;
  if (p.kind == Policy::Kind::Projection)
    diag.max_gamma_idempotency_err =
        std::max(diag.max_gamma_idempotency_err, (s.Gamma * s.Gamma - s.Gamma).norm());
  if (p.kind == Policy::Kind::Capped && s.eig_A.size() > 0) {
    // Gamma shares the eigenbasis of A, so its operator norm is available
    // from the mapped eigenvalues; recompute via the matrix for safety.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.Gamma, Eigen::EigenvaluesOnly);
    diag.max_gamma_op_norm =
        std::max(diag.max_gamma_op_norm, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  if (p.kind == Policy::Kind::Foellmer && s.t > 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.Gamma, Eigen::EigenvaluesOnly);
    diag.max_foellmer_gamma_excess = std::max(
        diag.max_foellmer_gamma_excess, es.eigenvalues().maxCoeff() - 1.0 / s.t);
  }
}

}  // namespace

TimeGrid make_step_grid(const Policy& policy, const EngineConfig& cfg, double beta) {
  TimeGrid g;
  if (policy.kind == Policy::Kind::Foellmer) {
    long j = 0;
    while (true) {
      const double t = foellmer_time(cfg, j);
      g.t.push_back(t);
      if (t >= cfg.foellmer_t_max) break;
      ++j;
      if (j > cfg.max_steps) break;
    }
  } else {
    const double dt = uniform_dt(cfg, beta);
    const long n = static_cast<long>(std::ceil(cfg.t_end_factor / cfg.dt_scale));
    for (long j = 0; j <= n; ++j) g.t.push_back(dt * static_cast<double>(j));
  }
  return g;
}

TrajectoryState init_trajectory(const DiscreteMeasure& m, const Policy& policy,
                                const EngineConfig& cfg) {
  cfg.validate();
  TrajectoryState s;
  s.measure = &m;
  s.weights = m.weights();
  refresh_state(s, policy, cfg);
  return s;
}

TrajectoryState step(const TrajectoryState& state, const Policy& policy,
                     const Eigen::VectorXd& dB, double dt, const EngineConfig& cfg) {
  if (dt <= 0.0) throw std::invalid_argument("step: dt must be positive");
  if (state.collapsed) return state;  // point masses stay put
  TrajectoryState next = state;
  advance_in_place(next, policy, cfg, dB, dt, state.t + dt);
  return next;
}

TrajectoryRecord simulate_trajectory(const DiscreteMeasure& m, const Policy& policy,
                                     const EngineConfig& cfg, RngStream& rng,
                                     const PreStepCb& pre, const PostStepCb& post) {
  TrajectoryRecord rec;
  rec.policy = policy;
  TrajectoryState s = init_trajectory(m, policy, cfg);
  const double beta = measure_radius(m);
  const double dt0 = uniform_dt(cfg, beta);
  const bool foellmer = policy.kind == Policy::Kind::Foellmer;

  bool keep_going = post ? post(s) : true;
  int prev_rank = s.rank;
  while (keep_going && !s.collapsed && s.step < cfg.max_steps) {
    double t_next, dt;
    if (foellmer) {
      t_next = foellmer_time(cfg, s.step + 1);
      dt = t_next - s.t;
      if (dt <= 0.0) break;  // horizon reached
    } else {
      t_next = dt0 * static_cast<double>(s.step + 1);
      dt = t_next - s.t;
    }
    const Eigen::VectorXd dB = std::sqrt(dt) * rng.normal_vector(m.dim());
    if (pre) pre(s, dB, dt);
    if (cfg.store_full_path && s.step == 0)
      rec.path.push_back({s.t, s.weights, Eigen::VectorXd::Zero(m.dim()), 0.0});
    advance_in_place(s, policy, cfg, dB, dt, t_next);
    if (cfg.store_full_path) rec.path.push_back({s.t, s.weights, dB, dt});
    update_diagnostics(rec.diag, s, policy, prev_rank);
    prev_rank = s.rank;
    rec.diag.max_simplex_err = std::max(rec.diag.max_simplex_err,
                                        std::abs(s.weights.sum() - 1.0));
    keep_going = post ? post(s) : true;
  }

  rec.steps = s.step;
  rec.T_hit = s.T_hit;
  rec.diag.final_max_weight = s.weights.maxCoeff();
  const int j = argmax_weight(s.weights);
  if (s.collapsed) {
    rec.collapsed = true;
    rec.tau = s.t + s.tau_extra;
    rec.embedded_point = m.atoms().col(j);
    rec.diag.embed_snap_dist = (s.a - rec.embedded_point).norm();
  } else if (foellmer && s.t >= cfg.foellmer_t_max) {
    // Horizon reached: the continuous process collapses by t = 1; snap to the
    // dominant atom when it clearly dominates, report otherwise.
    if (s.weights.maxCoeff() >= 0.5) {
      rec.collapsed = true;
      rec.tau = 1.0;
      rec.embedded_point = m.atoms().col(j);
      rec.diag.embed_snap_dist = (s.a - rec.embedded_point).norm();
    } else {
      rec.embedded_point = m.atoms().col(j);
      rec.tau = s.t;
      rec.failure = "no dominant atom at Foellmer horizon";
    }
  } else if (!keep_going) {
    rec.embedded_point = m.atoms().col(j);
    rec.tau = s.t;
  } else {
    rec.embedded_point = m.atoms().col(j);
    rec.tau = s.t;
    rec.failure = "no collapse within max_steps";
  }
  return rec;
}

TrajectoryRecord run_trajectory(const DiscreteMeasure& m, const Policy& policy,
                                const EngineConfig& cfg, RngStream& rng) {
  return simulate_trajectory(m, policy, cfg, rng, nullptr, nullptr);
}

// ---------------------------------------------------------------------------
// Foellmer exact-tilt integrator

double foellmer_quadratic_coeff(double t) {
  if (!(t < 1.0)) throw std::domain_error("foellmer_quadratic_coeff: t must be < 1");
  return t / (1.0 - t);
}

namespace {

void tilt_refresh(TiltState& s, const EngineConfig& cfg) {
  const auto& X = s.measure->atoms();
  const int k = static_cast<int>(X.cols());
  const double q = foellmer_quadratic_coeff(s.t);
  Eigen::VectorXd logw = s.log_w0;
  logw.noalias() += X.transpose() * s.theta;
  logw -= 0.5 * q * s.atom_sqnorm;
  const double max_l = logw.maxCoeff();
  if (!std::isfinite(max_l)) throw std::runtime_error("foellmer_tilt: non-finite exponent");
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    s.weights[i] = std::exp(logw[i] - max_l);
    sum += s.weights[i];
  }
  s.weights /= sum;
  if (s.track_moments) {
    compute_mean_cov(*s.measure, s.weights, s.a, s.A);
    s.Gamma = s.A / (1.0 - s.t);
  } else {
    s.a.noalias() = X * s.weights;
  }
  if (s.weights.maxCoeff() >= cfg.collapse_weight) s.collapsed = true;
  if (s.track_moments && s.A.trace() <= cfg.collapse_trace) s.collapsed = true;
}

}  // namespace

TiltState init_foellmer_tilt(const DiscreteMeasure& m, const EngineConfig& cfg,
                             bool track_moments) {
  cfg.validate();
  TiltState s;
  s.measure = &m;
  s.track_moments = track_moments;
  s.theta = Eigen::VectorXd::Zero(m.dim());
  s.weights = m.weights();
  s.log_w0 = m.weights().array().max(1e-300).log().matrix();
  s.atom_sqnorm = m.atoms().colwise().squaredNorm().transpose();
  tilt_refresh(s, cfg);
  return s;
}

void foellmer_tilt_step(TiltState& s, const Eigen::VectorXd& dB, double t_next,
                        const EngineConfig& cfg) {
  if (s.collapsed) return;
  if (!(t_next > s.t && t_next < 1.0))
    throw std::invalid_argument("foellmer_tilt_step: bad target time");
  const double om = 1.0 - s.t;
  const double dt = t_next - s.t;
  s.theta += (dt / (om * om)) * s.a + dB / om;
  s.t = t_next;
  ++s.step;
  tilt_refresh(s, cfg);
}

TrajectoryRecord simulate_foellmer_tilt(const DiscreteMeasure& m, const EngineConfig& cfg,
                                        RngStream& rng, bool track_moments,
                                        const TiltPreStepCb& pre, const TiltPostStepCb& post) {
  TrajectoryRecord rec;
  rec.policy = Policy::foellmer();
  TiltState s = init_foellmer_tilt(m, cfg, track_moments);
  bool keep_going = post ? post(s) : true;
  while (keep_going && !s.collapsed && s.step < cfg.max_steps) {
    const double t_next = foellmer_time(cfg, s.step + 1);
    const double dt = t_next - s.t;
    if (dt <= 0.0) break;
    const Eigen::VectorXd dB = std::sqrt(dt) * rng.normal_vector(m.dim());
    if (pre) pre(s, dB, dt);
    foellmer_tilt_step(s, dB, t_next, cfg);
    keep_going = post ? post(s) : true;
  }
  rec.steps = s.step;
  rec.diag.final_max_weight = s.weights.maxCoeff();
  const int j = argmax_weight(s.weights);
  if (s.collapsed) {
    rec.collapsed = true;
    rec.tau = s.t;
    rec.embedded_point = m.atoms().col(j);
    rec.diag.embed_snap_dist = (s.a - rec.embedded_point).norm();
  } else if (s.t >= cfg.foellmer_t_max && s.weights.maxCoeff() >= 0.5) {
    rec.collapsed = true;
    rec.tau = 1.0;
    rec.embedded_point = m.atoms().col(j);
    rec.diag.embed_snap_dist = (s.a - rec.embedded_point).norm();
  } else {
    rec.embedded_point = m.atoms().col(j);
    rec.tau = s.t;
    rec.failure = keep_going ? "no dominant atom at Foellmer horizon" : "";
  }
  return rec;
}

TrajectoryRecord run_foellmer_tilt(const DiscreteMeasure& m, const EngineConfig& cfg,
                                   RngStream& rng) {
  return simulate_foellmer_tilt(m, cfg, rng, /*track_moments=*/false, nullptr, nullptr);
}

// ---------------------------------------------------------------------------
// Gamma moment grids

std::vector<double> MomentGrid::variance_gamma2_trace() const {
  std::vector<double> out(times.size());
  for (std::size_t j = 0; j < times.size(); ++j)
    out[j] = e_gamma4[j].trace() - (e_gamma2[j] * e_gamma2[j]).trace();
  return out;
}

MomentGrid gamma_moments(const DiscreteMeasure& m, const Policy& policy,
                         const EngineConfig& cfg, const TimeGrid& grid, long n_traj,
                         std::uint64_t seed, int threads, int n_blocks) {
  if (n_traj < 100) throw std::invalid_argument("gamma_moments: n_traj must be >= 100");
  if (grid.size() < 2) throw std::invalid_argument("gamma_moments: grid too small");
  const int d = m.dim();
  const std::size_t T = grid.size();

  struct Accum {
    std::vector<Eigen::MatrixXd> g1, g2, g4;
    std::vector<double> tr1, tr2, tr4;
    long count = 0;
  };
  std::vector<Accum> acc(static_cast<std::size_t>(n_blocks));
  for (auto& a : acc) {
    a.g1.assign(T, Eigen::MatrixXd::Zero(d, d));
    a.g2.assign(T, Eigen::MatrixXd::Zero(d, d));
    a.g4.assign(T, Eigen::MatrixXd::Zero(d, d));
    a.tr1.assign(T, 0.0);
    a.tr2.assign(T, 0.0);
    a.tr4.assign(T, 0.0);
  }

  const bool foellmer = policy.kind == Policy::Kind::Foellmer;
  run_blocks(static_cast<std::size_t>(n_traj), n_blocks, threads,
             [&](int block, std::size_t lo, std::size_t hi) {
               Accum& a = acc[static_cast<std::size_t>(block)];
               for (std::size_t i = lo; i < hi; ++i) {
                 RngStream rng = RngStream::derive(seed, i);
                 auto hook = [&](double t, const Eigen::MatrixXd& G, long stepidx) -> bool {
                   (void)t;
                   const std::size_t j = static_cast<std::size_t>(stepidx);
                   if (j >= T) return false;
                   const Eigen::MatrixXd G2 = G * G;
                   a.g1[j] += G;
                   a.g2[j] += G2;
                   a.g4[j] += G2 * G2;
                   a.tr1[j] += G.trace();
                   a.tr2[j] += G2.trace();
                   a.tr4[j] += (G2 * G2).trace();
                   return stepidx + 1 < static_cast<long>(T);
                 };
                 if (foellmer) {
                   simulate_foellmer_tilt(m, cfg, rng, /*track_moments=*/true, nullptr,
                                          [&](const TiltState& s) {
                                            return hook(s.t, s.Gamma, s.step);
                                          });
                 } else {
                   simulate_trajectory(m, policy, cfg, rng, nullptr,
                                       [&](const TrajectoryState& s) {
                                         return hook(s.t, s.Gamma, s.step);
                                       });
                 }
                 ++a.count;
               }
             });

  MomentGrid mg;
  mg.policy = policy;
  mg.times = grid.t;
  mg.n_traj = n_traj;
  mg.n_blocks = n_blocks;
  mg.e_gamma.assign(T, Eigen::MatrixXd::Zero(d, d));
  mg.e_gamma2.assign(T, Eigen::MatrixXd::Zero(d, d));
  mg.e_gamma4.assign(T, Eigen::MatrixXd::Zero(d, d));
  mg.sigma.assign(T, 0.0);
  mg.se_tr_gamma.assign(T, 0.0);
  mg.se_tr_gamma2.assign(T, 0.0);
  mg.se_tr_gamma4.assign(T, 0.0);
  mg.block_gamma.resize(static_cast<std::size_t>(n_blocks));
  mg.block_gamma2.resize(static_cast<std::size_t>(n_blocks));
  mg.block_gamma4.resize(static_cast<std::size_t>(n_blocks));
  mg.block_count.resize(static_cast<std::size_t>(n_blocks));
  for (int b = 0; b < n_blocks; ++b) {
    mg.block_gamma[static_cast<std::size_t>(b)] = acc[static_cast<std::size_t>(b)].g1;
    mg.block_gamma2[static_cast<std::size_t>(b)] = acc[static_cast<std::size_t>(b)].g2;
    mg.block_gamma4[static_cast<std::size_t>(b)] = acc[static_cast<std::size_t>(b)].g4;
    mg.block_count[static_cast<std::size_t>(b)] = acc[static_cast<std::size_t>(b)].count;
  }

  const double n = static_cast<double>(n_traj);
  for (std::size_t j = 0; j < T; ++j) {
    for (const auto& a : acc) {
      mg.e_gamma[j] += a.g1[j];
      mg.e_gamma2[j] += a.g2[j];
      mg.e_gamma4[j] += a.g4[j];
    }
    mg.e_gamma[j] /= n;
    mg.e_gamma2[j] /= n;
    mg.e_gamma4[j] /= n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mg.e_gamma[j], Eigen::EigenvaluesOnly);
    mg.sigma[j] = std::max(0.0, es.eigenvalues().minCoeff());

    // stderr of trace means from the scatter of block means
    auto se_from_blocks = [&](const std::vector<double> Accum::*member) {
      double mean = 0.0;
      int nb = 0;
      for (const auto& a : acc)
        if (a.count > 0) {
          mean += (a.*member)[j] / static_cast<double>(a.count);
          ++nb;
        }
      if (nb < 2) return 0.0;
      mean /= nb;
      double ss = 0.0;
      for (const auto& a : acc)
        if (a.count > 0) {
          const double v = (a.*member)[j] / static_cast<double>(a.count) - mean;
          ss += v * v;
        }
      return std::sqrt(ss / (nb - 1) / nb);
    };
    mg.se_tr_gamma[j] = se_from_blocks(&Accum::tr1);
    mg.se_tr_gamma2[j] = se_from_blocks(&Accum::tr2);
    mg.se_tr_gamma4[j] = se_from_blocks(&Accum::tr4);
  }
  return mg;
}

// ---------------------------------------------------------------------------

DAtResidual dAt_residual(const DiscreteMeasure& m, const TrajectoryRecord& record) {
  if (record.path.size() < 2)
    throw std::invalid_argument("dAt_residual: record lacks full-path storage");
  DAtResidual out;
  EngineConfig cfg;  // thresholds irrelevant for reconstruction
  const auto& X = m.atoms();
  const int d = m.dim();

  auto state_of = [&](const Eigen::VectorXd& w, double t) {
    TrajectoryState s;
    s.measure = &m;
    s.weights = w;
    s.t = t;
    refresh_state(s, record.policy, cfg);
    return s;
  };

  double total = 0.0;
  long n_used = 0;
  for (std::size_t j = 0; j + 1 < record.path.size(); ++j) {
    const auto& cur = record.path[j];
    const auto& nxt = record.path[j + 1];
    TrajectoryState s0 = state_of(cur.weights, cur.t);
    if (s0.collapsed) break;
    TrajectoryState s1 = state_of(nxt.weights, nxt.t);

    // third central moment tensor contracted with C dB
    const Eigen::VectorXd cdb = s0.C * nxt.dB;
    Eigen::MatrixXd mart = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < X.cols(); ++i) {
      const Eigen::VectorXd c = X.col(i) - s0.a;
      mart.noalias() += s0.weights[i] * c.dot(cdb) * c * c.transpose();
    }
    const Eigen::MatrixXd drift = s0.A * s0.C * s0.C * s0.A * nxt.dt;
    const double res = ((s1.A - s0.A) - (mart - drift)).norm();
    out.per_step.push_back(res);
    total += res;
    ++n_used;
  }
  if (n_used == 0) throw std::invalid_argument("dAt_residual: no usable steps");
  out.mean_residual = total / static_cast<double>(n_used);
  return out;
}

}  // namespace cltlab
