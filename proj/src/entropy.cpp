#include "cltlab/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include <fftw3.h>

#include "cltlab/parallel.hpp"
#include "cltlab/stats.hpp"

namespace cltlab {

double gaussian_rel_entropy_1d(double s2) {
  if (!(s2 > 0.0)) throw std::invalid_argument("gaussian_rel_entropy_1d: s2 must be positive");
  return 0.5 * (s2 - 1.0 - std::log(s2));
}

std::pair<EntropyEstimate, DriftGrid> estimate_entropy_variational(
    const DiscreteMeasure& m, const EngineConfig& cfg, long n_traj, std::uint64_t seed,
    int threads, bool acknowledge_particle_approximation) {
  if (n_traj < 2) throw std::invalid_argument("estimate_entropy_variational: n_traj >= 2");
  if (!m.is_particle_cloud() && !acknowledge_particle_approximation)
    throw std::invalid_argument(
        "estimate_entropy_variational: discrete input (relative entropy to a Gaussian "
        "diverges); pass a particle cloud or acknowledge the approximation");
  const MeasureMoments mm = moments(m);
  if (mm.mean.norm() > 1e-8 * (1.0 + mm.radius))
    throw std::invalid_argument("estimate_entropy_variational: measure must be centered");

  const TimeGrid grid = make_step_grid(Policy::foellmer(), cfg, mm.radius);
  const std::size_t T = grid.size();
  const int d = m.dim();

  const int n_blocks = 8;
  struct Accum {
    std::vector<double> sum_v2, sum_v2_sq;
    std::vector<double> ent_samples;
    long count = 0;
  };
  std::vector<Accum> acc(static_cast<std::size_t>(n_blocks));
  for (auto& a : acc) {
    a.sum_v2.assign(T, 0.0);
    a.sum_v2_sq.assign(T, 0.0);
  }

  run_blocks(static_cast<std::size_t>(n_traj), n_blocks, threads,
             [&](int block, std::size_t lo, std::size_t hi) {
               Accum& a = acc[static_cast<std::size_t>(block)];
               std::vector<double> v2(T, 0.0);
               for (std::size_t i = lo; i < hi; ++i) {
                 RngStream rng = RngStream::derive(seed, i);
                 Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
                 std::fill(v2.begin(), v2.end(), 0.0);
                 simulate_foellmer_tilt(
                     m, cfg, rng, /*track_moments=*/true,
                     [&](const TiltState& s, const Eigen::VectorXd& dB, double) {
                       const double om = 1.0 - s.t;
                       v.noalias() += (s.Gamma * dB - dB) / om;
                     },
                     [&](const TiltState& s) {
                       const std::size_t j = static_cast<std::size_t>(s.step);
                       if (j < T) v2[j] = v.squaredNorm();
                       return s.step + 1 < static_cast<long>(T);
                     });
                 // Collapsed-early paths keep the last drift energy forward.
                 // (Clouds large enough for this estimator should not collapse
                 // before the horizon; the freeze only guards small inputs.)
                 double last = 0.0;
                 double ent = 0.0;
                 for (std::size_t j = 0; j < T; ++j) {
                   if (v2[j] == 0.0 && j > 0 && v2[j - 1] > 0.0) v2[j] = last;
                   last = v2[j];
                   a.sum_v2[j] += v2[j];
                   a.sum_v2_sq[j] += v2[j] * v2[j];
                   if (j > 0)
                     ent += 0.25 * (v2[j] + v2[j - 1]) * (grid.t[j] - grid.t[j - 1]);
                 }
                 ent += 0.5 * (1.0 - grid.t.back()) * v2.back();
                 a.ent_samples.push_back(ent);
                 ++a.count;
               }
             });

  DriftGrid dg;
  dg.times = grid.t;
  dg.n_traj = n_traj;
  dg.ev2.assign(T, 0.0);
  dg.stderr_.assign(T, 0.0);
  const double n = static_cast<double>(n_traj);
  for (std::size_t j = 0; j < T; ++j) {
    double s = 0.0, ss = 0.0;
    for (const auto& a : acc) {
      s += a.sum_v2[j];
      ss += a.sum_v2_sq[j];
    }
    dg.ev2[j] = s / n;
    const double var = std::max(0.0, ss / n - dg.ev2[j] * dg.ev2[j]);
    dg.stderr_[j] = std::sqrt(var / n);
  }

  std::vector<double> ent_all;
  ent_all.reserve(static_cast<std::size_t>(n_traj));
  for (const auto& a : acc)
    ent_all.insert(ent_all.end(), a.ent_samples.begin(), a.ent_samples.end());
  const MeanStderr ms = mean_stderr(ent_all);

  EntropyEstimate est;
  est.method = "variational";
  est.reference = "standard-gaussian";
  est.raw_value = ms.mean;
  est.value = std::max(0.0, ms.mean);
  est.ci = ms.stderr_;
  est.truncation_tail = 0.5 * (1.0 - grid.t.back()) * dg.ev2.back();
  return {est, dg};
}

// ---------------------------------------------------------------------------
// FFT oracle

namespace {

struct FftGrid {
  std::vector<double> x;
  std::vector<double> p;  // density of the normalized sum on x
  double dx = 0.0;
};

FftGrid sum_density_fft(const Density1d& f, long n, int grid_size) {
  const int m = grid_size;
  const double half_support = std::max(std::abs(f.lo()), std::abs(f.hi()));
  const double r = std::max(half_support, 14.0) + 1.0;
  const double dx = 2.0 * r / m;
  const double sqn = std::sqrt(static_cast<double>(n));

  // Scaled summand density q(y) = sqrt(n) p1(sqrt(n) y) sampled on the torus
  // grid x_k = -r + k dx.
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(m));
  double mass = 0.0;
  for (int k = 0; k < m; ++k) {
    const double x = -r + dx * k;
    const double q = sqn * f.pdf(sqn * x);
    buf[static_cast<std::size_t>(k)] = q;
    mass += q * dx;
  }
  if (std::abs(mass - 1.0) > 1e-6)
    throw std::runtime_error("entropy_oracle_product_fft: summand mass off grid");
  for (auto& b : buf) b /= mass;

  fftw_plan fwd = fftw_plan_dft_1d(m, reinterpret_cast<fftw_complex*>(buf.data()),
                                   reinterpret_cast<fftw_complex*>(buf.data()),
                                   FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);

  // Characteristic function at omega_k includes the phase from the grid
  // origin; with 2r = m dx it reduces to (-1)^k.
  for (int k = 0; k < m; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    std::complex<double> c = sign * dx * buf[static_cast<std::size_t>(k)];
    std::complex<double> cn = std::abs(c) < 1e-300 ? std::complex<double>(0.0, 0.0)
                                                   : std::pow(c, static_cast<double>(n));
    buf[static_cast<std::size_t>(k)] = cn * sign / dx;
  }

  fftw_plan bwd = fftw_plan_dft_1d(m, reinterpret_cast<fftw_complex*>(buf.data()),
                                   reinterpret_cast<fftw_complex*>(buf.data()),
                                   FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(bwd);
  fftw_destroy_plan(bwd);

  FftGrid out;
  out.dx = dx;
  out.x.resize(static_cast<std::size_t>(m));
  out.p.resize(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    out.x[static_cast<std::size_t>(k)] = -r + dx * k;
    out.p[static_cast<std::size_t>(k)] =
        std::max(0.0, buf[static_cast<std::size_t>(k)].real() / m);
  }

  // Aliasing check: density mass near the torus boundary.
  double edge_mass = 0.0;
  const int edge = std::max(2, m / 64);
  for (int k = 0; k < edge; ++k)
    edge_mass += (out.p[static_cast<std::size_t>(k)] +
                  out.p[static_cast<std::size_t>(m - 1 - k)]) *
                 dx;
  if (edge_mass > 1e-10)
    throw std::runtime_error("entropy_oracle_product_fft: aliasing detected (boundary mass)");
  return out;
}

double entropy_vs_gaussian(const FftGrid& gridp, double var_ref) {
  double ent = 0.0;
  const double log_norm = -0.5 * std::log(2.0 * M_PI * var_ref);
  for (std::size_t k = 0; k < gridp.x.size(); ++k) {
    const double p = gridp.p[k];
    if (p <= 0.0) continue;
    const double lq = log_norm - gridp.x[k] * gridp.x[k] / (2.0 * var_ref);
    ent += p * (std::log(p) - lq) * gridp.dx;
  }
  return ent;
}

}  // namespace

EntropyEstimate entropy_oracle_product_fft(const Density1d& f, long n, double sigma_ref,
                                           int grid_size) {
  if (n < 1) throw std::invalid_argument("entropy_oracle_product_fft: n >= 1");
  if (!(sigma_ref > 0.0))
    throw std::invalid_argument("entropy_oracle_product_fft: sigma_ref must be positive");
  if (grid_size < (1 << 14))
    throw std::invalid_argument("entropy_oracle_product_fft: grid_size must be >= 2^14");

  const double full = entropy_vs_gaussian(sum_density_fft(f, n, grid_size), sigma_ref);
  const double half = entropy_vs_gaussian(sum_density_fft(f, n, grid_size / 2), sigma_ref);
  const double err = std::abs(full - half);
  if (err > 0.01 * std::max(std::abs(full), 1e-6))
    throw std::runtime_error("entropy_oracle_product_fft: grid-doubling error above 1%");

  EntropyEstimate est;
  est.method = "fft-oracle";
  est.reference = sigma_ref == 1.0 ? "standard-gaussian" : "matched-gaussian";
  est.raw_value = full;
  est.value = std::max(0.0, full);
  est.ci = err;
  return est;
}

double quant_entropy_bound_first(const MomentGrid& mg, const std::vector<double>& variance_grid,
                                 long n) {
  const std::size_t T = mg.times.size();
  if (variance_grid.size() != T)
    throw std::invalid_argument("quant_entropy_bound_first: grid mismatch");
  if (n < 1) throw std::invalid_argument("quant_entropy_bound_first: n >= 1");
  for (double s : mg.sigma)
    if (!(s > 0.0))
      throw std::domain_error("quant_entropy_bound_first: zero sigma on grid");

  // Suffix tail integral int_t^1 sigma_s^{-2} ds, grid part plus the
  // truncated remainder at the last sigma.
  std::vector<double> tail(T, 0.0);
  tail[T - 1] = (1.0 - mg.times[T - 1]) / (mg.sigma[T - 1] * mg.sigma[T - 1]);
  for (std::size_t j = T - 1; j > 0; --j) {
    const double a = 1.0 / (mg.sigma[j - 1] * mg.sigma[j - 1]);
    const double b = 1.0 / (mg.sigma[j] * mg.sigma[j]);
    tail[j - 1] = tail[j] + 0.5 * (a + b) * (mg.times[j] - mg.times[j - 1]);
  }

  auto integrand = [&](std::size_t j) {
    const double om = 1.0 - mg.times[j];
    return std::max(0.0, variance_grid[j]) / (om * om * mg.sigma[j] * mg.sigma[j]) * tail[j];
  };
  double integral = 0.0;
  for (std::size_t j = 1; j < T; ++j)
    integral += 0.5 * (integrand(j - 1) + integrand(j)) * (mg.times[j] - mg.times[j - 1]);
  return integral / static_cast<double>(n);
}

double strong_logconcave_bound(int d, double sigma, double ent_x, long n) {
  if (!(sigma > 0.0)) throw std::invalid_argument("strong_logconcave_bound: sigma > 0");
  if (d < 1 || n < 1) throw std::invalid_argument("strong_logconcave_bound: bad d or n");
  return 2.0 * (static_cast<double>(d) + 2.0 * ent_x) /
         (sigma * sigma * sigma * sigma * static_cast<double>(n));
}

std::vector<ResidualPoint> gamma_representation_residual(const MomentGrid& mg,
                                                         const DriftGrid& dg,
                                                         const SymMatrix& sigma) {
  const std::size_t T = mg.times.size();
  if (dg.times.size() != T)
    throw std::invalid_argument("gamma_representation_residual: grid mismatch");
  for (std::size_t j = 0; j < T; ++j)
    if (std::abs(mg.times[j] - dg.times[j]) > 1e-12 * (1.0 + std::abs(mg.times[j])))
      throw std::invalid_argument("gamma_representation_residual: grid mismatch");

  const double d = static_cast<double>(mg.dim());
  const double tr_sigma = sigma.trace();
  std::vector<ResidualPoint> out(T);
  for (std::size_t j = 0; j < T; ++j) {
    const double om = 1.0 - mg.times[j];
    const double lhs = mg.e_gamma[j].trace();
    const double rhs = d - om * (d - tr_sigma + dg.ev2[j]);
    out[j].t = mg.times[j];
    out[j].residual = lhs - rhs;
    out[j].stderr_ = std::sqrt(mg.se_tr_gamma[j] * mg.se_tr_gamma[j] +
                               om * om * dg.stderr_[j] * dg.stderr_[j]);
  }
  return out;
}

std::vector<ResidualPoint> cov_derivative_residual(const MomentGrid& mg) {
  const std::size_t T = mg.times.size();
  if (T < 16) throw std::invalid_argument("cov_derivative_residual: grid too coarse");
  const int d = mg.dim();

  // Residual matrix per block, so the noise scale of the pooled residual is
  // the block scatter of the estimator itself.
  std::vector<std::size_t> blocks;
  for (std::size_t b = 0; b < mg.block_count.size(); ++b)
    if (mg.block_count[b] > 0) blocks.push_back(b);
  const double nb = static_cast<double>(blocks.size());

  std::vector<ResidualPoint> out;
  out.reserve(T - 2);
  for (std::size_t j = 1; j + 1 < T; ++j) {
    const double h = mg.times[j + 1] - mg.times[j - 1];
    auto fd_residual = [&](const Eigen::MatrixXd& g_lo, const Eigen::MatrixXd& g_hi,
                           const Eigen::MatrixXd& g2_mid) {
      const Eigen::MatrixXd cov_hi = (1.0 - mg.times[j + 1]) * g_hi;
      const Eigen::MatrixXd cov_lo = (1.0 - mg.times[j - 1]) * g_lo;
      return Eigen::MatrixXd((cov_hi - cov_lo) / h + g2_mid);
    };

    ResidualPoint p;
    p.t = mg.times[j];
    p.residual = fd_residual(mg.e_gamma[j - 1], mg.e_gamma[j + 1], mg.e_gamma2[j]).norm();

    if (blocks.size() >= 2 && mg.block_gamma.size() == mg.block_count.size() &&
        mg.block_gamma2.size() == mg.block_count.size()) {
      Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(d, d);
      std::vector<Eigen::MatrixXd> rs;
      rs.reserve(blocks.size());
      for (std::size_t b : blocks) {
        const double cnt = static_cast<double>(mg.block_count[b]);
        rs.push_back(fd_residual(mg.block_gamma[b][j - 1] / cnt,
                                 mg.block_gamma[b][j + 1] / cnt,
                                 mg.block_gamma2[b][j] / cnt));
        mean += rs.back();
      }
      mean /= nb;
      double var_sum = 0.0;
      for (const auto& r : rs) var_sum += (r - mean).squaredNorm();
      p.stderr_ = std::sqrt(var_sum / (nb - 1.0) / nb);
    } else if (mg.se_tr_gamma.size() == T) {
      p.stderr_ = (mg.se_tr_gamma[j - 1] + mg.se_tr_gamma[j + 1]) / h;
    } else {
      p.stderr_ = 0.0;  // synthetic grids without uncertainty data
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace cltlab
