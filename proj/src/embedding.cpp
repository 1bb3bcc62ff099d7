#include "cltlab/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "cltlab/parallel.hpp"

namespace cltlab {

Eigen::VectorXd sample_sn_iid(const DiscreteMeasure& m, long n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("sample_sn_iid: n must be >= 1");
  MeasureSampler sampler(m);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(m.dim());
  for (long i = 0; i < n; ++i) sum += sampler.sample(rng);
  return sum / std::sqrt(static_cast<double>(n));
}

Eigen::MatrixXd sample_sn_iid_batch(const DiscreteMeasure& m, long n, int k,
                                    std::uint64_t seed, int threads) {
  Eigen::MatrixXd out(m.dim(), k);
  run_blocks(static_cast<std::size_t>(k), std::max(1, k / 64 + 1), threads,
             [&](int, std::size_t lo, std::size_t hi) {
               for (std::size_t i = lo; i < hi; ++i) {
                 RngStream rng = RngStream::derive(seed, i);
                 out.col(static_cast<int>(i)) = sample_sn_iid(m, n, rng);
               }
             });
  return out;
}

namespace {

void check_grid_match(const MomentGrid& mg, const TimeGrid& grid) {
  if (mg.times.size() != grid.size())
    throw std::invalid_argument("sample_sn_coupled: grid mismatch between mg and cfg");
  for (std::size_t j = 0; j < grid.size(); ++j)
    if (std::abs(mg.times[j] - grid.t[j]) > 1e-12 * (1.0 + std::abs(grid.t[j])))
      throw std::invalid_argument("sample_sn_coupled: grid mismatch between mg and cfg");
}

struct CoupledSampler {
  const DiscreteMeasure* m;
  Policy policy;
  EngineConfig cfg;
  TimeGrid grid;
  std::vector<Eigen::MatrixXd> sqrt_e2;  // per grid index
  std::vector<double> sqrt_e2_scalar;    // d == 1 shortcut

  CoupledSampler(const DiscreteMeasure& measure, const Policy& p, const MomentGrid& mg,
                 const EngineConfig& c)
      : m(&measure), policy(p), cfg(c) {
    // The raw update keeps every a-increment inside Gamma dB, so the coupled
    // integral reproduces the normalized sum of endpoints exactly.
    cfg.endgame_exponent_cap = std::numeric_limits<double>::infinity();
    const MeasureMoments mm = moments(measure);
    if (mm.mean.norm() > 1e-8 * (1.0 + mm.radius))
      throw std::invalid_argument("sample_sn_coupled: measure must be centered");
    grid = make_step_grid(policy, cfg, mm.radius);
    check_grid_match(mg, grid);
    const int d = measure.dim();
    sqrt_e2.reserve(mg.times.size());
    for (const auto& e2 : mg.e_gamma2) {
      if (d == 1) {
        sqrt_e2_scalar.push_back(std::sqrt(std::max(0.0, e2(0, 0))));
        sqrt_e2.emplace_back();
      } else {
        sqrt_e2.push_back(psd_sqrt(SymMatrix(e2)).mat());
      }
    }
  }

  CoupledPair sample(long n, RngStream& rng) const {
    const int d = m->dim();
    std::vector<TrajectoryState> states;
    states.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) states.push_back(init_trajectory(*m, policy, cfg));

    Eigen::VectorXd s = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));

    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
      const double dt = grid.t[j + 1] - grid.t[j];
      const double sq_dt = std::sqrt(dt);
      bool any_alive = false;

      // The reduced increment is built from the realized martingale increments
      // da_i (identically Gamma_i dB_i in continuous time); this keeps the
      // telescoping identity s_n = (1/sqrt n) sum a_end exact.
      if (d == 1) {
        double u = 0.0, sum_da = 0.0;
        for (auto& st : states) {
          if (st.collapsed) continue;
          any_alive = true;
          const double gamma = st.Gamma(0, 0);
          const double db = sq_dt * rng.normal();
          u += gamma * gamma;
          const double a_before = st.a[0];
          advance_one(st, db, grid.t[j + 1], dt);
          sum_da += st.a[0] - a_before;
        }
        if (!any_alive) break;
        u /= static_cast<double>(n);
        const double gt = std::sqrt(u);
        const double db_tilde = gt > 0.0 ? (inv_sqrt_n * sum_da) / gt : 0.0;
        s[0] += gt * db_tilde;
        g[0] += sqrt_e2_scalar[j] * db_tilde;
      } else {
        Eigen::MatrixXd u = Eigen::MatrixXd::Zero(d, d);
        Eigen::VectorXd sum_da = Eigen::VectorXd::Zero(d);
        for (auto& st : states) {
          if (st.collapsed) continue;
          any_alive = true;
          const Eigen::VectorXd db = sq_dt * rng.normal_vector(d);
          u.noalias() += st.Gamma * st.Gamma;
          const Eigen::VectorXd a_before = st.a;
          advance_vec(st, db, grid.t[j + 1], dt);
          sum_da += st.a - a_before;
        }
        if (!any_alive) break;
        u /= static_cast<double>(n);
        // One decomposition serves both the root and its pseudo-inverse.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (u + u.transpose()));
        const Eigen::VectorXd& lam = es.eigenvalues();
        const double cutoff = default_cutoff(lam.cwiseAbs().maxCoeff());
        Eigen::VectorXd root(d), root_inv(d);
        for (int r = 0; r < d; ++r) {
          root[r] = lam[r] > 0.0 ? std::sqrt(lam[r]) : 0.0;
          root_inv[r] = lam[r] > cutoff ? 1.0 / std::sqrt(lam[r]) : 0.0;
        }
        const Eigen::MatrixXd& q = es.eigenvectors();
        const Eigen::MatrixXd gt = q * root.asDiagonal() * q.transpose();
        const Eigen::VectorXd db_tilde =
            q * (root_inv.asDiagonal() * (q.transpose() * (inv_sqrt_n * sum_da)));
        s.noalias() += gt * db_tilde;
        g.noalias() += sqrt_e2[j] * db_tilde;
      }
    }

    CoupledPair out;
    out.n = n;
    out.s_n = s;
    out.g = g;
    out.sn_direct = Eigen::VectorXd::Zero(d);
    for (const auto& st : states) out.sn_direct += st.a;
    out.sn_direct *= inv_sqrt_n;
    if (!out.s_n.allFinite() || !out.g.allFinite())
      throw std::runtime_error("sample_sn_coupled: non-finite coupled pair");
    return out;
  }

 private:
  void advance_one(TrajectoryState& st, double db, double t_next, double dt) const {
    Eigen::VectorXd v(1);
    v[0] = db;
    advance_vec(st, v, t_next, dt);
  }
  void advance_vec(TrajectoryState& st, const Eigen::VectorXd& db, double t_next,
                   double dt) const {
    TrajectoryState next = step(st, policy, db, dt, cfg);
    next.t = t_next;  // keep grid times exact
    st = std::move(next);
  }
};

}  // namespace

CoupledPair sample_sn_coupled(const DiscreteMeasure& m, const Policy& policy, long n,
                              const MomentGrid& mg, const EngineConfig& cfg,
                              RngStream& rng) {
  if (n < 1) throw std::invalid_argument("sample_sn_coupled: n must be >= 1");
  CoupledSampler sampler(m, policy, mg, cfg);
  return sampler.sample(n, rng);
}

std::vector<CoupledPair> sample_coupled_pairs(const DiscreteMeasure& m, const Policy& policy,
                                              long n, const MomentGrid& mg,
                                              const EngineConfig& cfg, std::uint64_t seed,
                                              int n_pairs, int threads) {
  CoupledSampler sampler(m, policy, mg, cfg);
  std::vector<CoupledPair> out(static_cast<std::size_t>(n_pairs));
  run_blocks(static_cast<std::size_t>(n_pairs), std::max(1, n_pairs / 8), threads,
             [&](int, std::size_t lo, std::size_t hi) {
               for (std::size_t i = lo; i < hi; ++i) {
                 RngStream rng = RngStream::derive(seed, i);
                 out[i] = sampler.sample(n, rng);
               }
             });
  return out;
}

BoundReportMain theorem_main_rhs(const MomentGrid& mg, long n) {
  if (n < 1) throw std::invalid_argument("theorem_main_rhs: n must be >= 1");
  const std::size_t T = mg.times.size();
  if (T < 2) throw std::invalid_argument("theorem_main_rhs: moment grid too small");

  auto evaluate = [&](const std::vector<Eigen::MatrixXd>& e2,
                      const std::vector<Eigen::MatrixXd>& e4, BoundReportMain* detail) {
    double integral = 0.0;
    double prev = 0.0;
    std::optional<double> crossover;
    bool prev_tail = false;
    for (std::size_t j = 0; j < T; ++j) {
      const double tr2 = e2[j].trace();
      double b1 = 0.0;
      if (tr2 > 0.0) {
        const Eigen::MatrixXd pinv = pseudo_inverse(SymMatrix(e2[j])).mat();
        b1 = (e4[j] * pinv).trace() / static_cast<double>(n);
      }
      const double b2 = 4.0 * tr2;
      const double f = std::min(b1, b2);
      const bool tail = b2 <= b1;
      if (j > 0) {
        integral += 0.5 * (prev + f) * (mg.times[j] - mg.times[j - 1]);
        if (tail && !prev_tail && !crossover) crossover = mg.times[j];
      } else if (tail) {
        crossover = mg.times[0];
      }
      if (detail) {
        detail->branch_n.push_back(b1);
        detail->branch_tail.push_back(b2);
        detail->integrand.push_back(f);
      }
      prev = f;
      prev_tail = tail;
    }
    if (detail) detail->crossover_time = crossover;
    return integral;
  };

  BoundReportMain report;
  report.n = n;
  report.times = mg.times;
  report.rhs_integral = evaluate(mg.e_gamma2, mg.e_gamma4, &report);

  // Block-batched uncertainty
  std::vector<double> block_vals;
  for (std::size_t b = 0; b < mg.block_gamma2.size(); ++b) {
    if (mg.block_count[b] <= 0) continue;
    const double cnt = static_cast<double>(mg.block_count[b]);
    std::vector<Eigen::MatrixXd> e2(T), e4(T);
    for (std::size_t j = 0; j < T; ++j) {
      e2[j] = mg.block_gamma2[b][j] / cnt;
      e4[j] = mg.block_gamma4[b][j] / cnt;
    }
    block_vals.push_back(evaluate(e2, e4, nullptr));
  }
  if (block_vals.size() >= 2) {
    const MeanStderr ms = mean_stderr(block_vals);
    report.rhs_se = ms.stderr_;
  }
  return report;
}

TauStats tau_statistics(const std::vector<TrajectoryRecord>& records, double beta) {
  if (records.size() < 1000)
    throw std::invalid_argument("tau_statistics: need at least 1e3 records");
  if (!(beta > 0.0)) throw std::invalid_argument("tau_statistics: beta must be positive");
  std::vector<double> taus;
  taus.reserve(records.size());
  for (const auto& r : records) {
    if (!r.collapsed)
      throw std::invalid_argument("tau_statistics: uncollapsed records present");
    taus.push_back(r.tau);
  }
  const MeanStderr ms = mean_stderr(taus);

  TauStats out;
  out.mean_tau = ms.mean;
  out.stderr_ = ms.stderr_;
  out.beta = beta;
  out.count = static_cast<long>(taus.size());

  const double unit = 2.0 * beta * beta;
  const double max_tau = *std::max_element(taus.begin(), taus.end());
  const int i_max = std::min(16, static_cast<int>(std::floor(max_tau / unit)) + 1);
  const double z99 = 2.5758293035489004;
  for (int i = 0; i <= i_max; ++i) {
    const double thr = unit * static_cast<double>(i);
    std::size_t cnt = 0;
    for (double t : taus)
      if (t >= thr) ++cnt;
    const Interval ci = wilson_interval(cnt, taus.size(), z99);
    TauTailRow row;
    row.i = i;
    row.threshold = thr;
    row.freq = static_cast<double>(cnt) / static_cast<double>(taus.size());
    row.ci_lo = ci.lo;
    row.ci_hi = ci.hi;
    row.bound = std::pow(2.0, -static_cast<double>(i));
    out.tail.push_back(row);
  }
  return out;
}

}  // namespace cltlab
