#include "cltlab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cltlab {

namespace {

bool lex_less(const Eigen::MatrixXd& a, int i, int j) {
  for (int r = 0; r < a.rows(); ++r) {
    if (a(r, i) < a(r, j)) return true;
    if (a(r, i) > a(r, j)) return false;
  }
  return false;
}

bool cols_equal(const Eigen::MatrixXd& a, int i, int j) {
  for (int r = 0; r < a.rows(); ++r)
    if (a(r, i) != a(r, j)) return false;
  return true;
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(Eigen::MatrixXd atoms, Eigen::VectorXd weights,
                                 bool is_particle_cloud)
    : is_particle_cloud_(is_particle_cloud) {
  if (atoms.cols() != weights.size() || atoms.cols() == 0)
    throw std::invalid_argument("DiscreteMeasure: atoms/weights size mismatch");
  if (!atoms.allFinite() || !weights.allFinite())
    throw std::invalid_argument("DiscreteMeasure: non-finite entries");
  if ((weights.array() < 0.0).any())
    throw std::invalid_argument("DiscreteMeasure: negative weight");
  const double total = weights.sum();
  if (!(total > 0.0)) throw std::invalid_argument("DiscreteMeasure: zero total weight");

  // Merge exact duplicates (weights added) via a lexicographic sort.
  const int k = static_cast<int>(atoms.cols());
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return lex_less(atoms, i, j); });

  std::vector<int> keep;
  std::vector<double> merged;
  keep.reserve(order.size());
  for (int idx : order) {
    if (!keep.empty() && cols_equal(atoms, keep.back(), idx)) {
      merged.back() += weights[idx];
    } else {
      keep.push_back(idx);
      merged.push_back(weights[idx]);
    }
  }

  atoms_.resize(atoms.rows(), static_cast<int>(keep.size()));
  weights_.resize(static_cast<int>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    atoms_.col(static_cast<int>(i)) = atoms.col(keep[i]);
    weights_[static_cast<int>(i)] = merged[i] / total;
  }
}

DiscreteMeasure DiscreteMeasure::point_mass(const Eigen::VectorXd& x) {
  Eigen::MatrixXd a(x.size(), 1);
  a.col(0) = x;
  return DiscreteMeasure(a, Eigen::VectorXd::Ones(1));
}

DiscreteMeasure DiscreteMeasure::two_point(double beta) {
  Eigen::MatrixXd a(1, 2);
  a << -beta, beta;
  return DiscreteMeasure(a, Eigen::VectorXd::Constant(2, 0.5));
}

nlohmann::json DiscreteMeasure::to_json() const {
  nlohmann::json j;
  j["dim"] = dim();
  auto atoms = nlohmann::json::array();
  for (int i = 0; i < size(); ++i) {
    auto row = nlohmann::json::array();
    for (int r = 0; r < dim(); ++r) row.push_back(atoms_(r, i));
    atoms.push_back(row);
  }
  j["atoms"] = atoms;
  j["weights"] = std::vector<double>(weights_.data(), weights_.data() + weights_.size());
  if (is_particle_cloud_) j["is_particle_cloud"] = true;
  return j;
}

DiscreteMeasure DiscreteMeasure::from_json(const nlohmann::json& j) {
  const int d = j.at("dim").get<int>();
  const auto& atoms = j.at("atoms");
  const auto& weights = j.at("weights");
  if (atoms.size() != weights.size())
    throw std::invalid_argument("measure JSON: atoms/weights size mismatch");
  Eigen::MatrixXd a(d, static_cast<int>(atoms.size()));
  Eigen::VectorXd w(static_cast<int>(weights.size()));
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const auto& pt = atoms[i];
    if (static_cast<int>(pt.size()) != d)
      throw std::invalid_argument("measure JSON: atom dimension mismatch");
    for (int r = 0; r < d; ++r) a(r, static_cast<int>(i)) = pt[static_cast<std::size_t>(r)];
    w[static_cast<int>(i)] = weights[i];
  }
  return DiscreteMeasure(a, w, j.value("is_particle_cloud", false));
}

MeasureMoments moments(const DiscreteMeasure& m) {
  MeasureMoments out;
  out.mean = m.atoms() * m.weights();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m.dim(), m.dim());
  double radius = 0.0;
  for (int i = 0; i < m.size(); ++i) {
    const Eigen::VectorXd c = m.atoms().col(i) - out.mean;
    cov.noalias() += m.weights()[i] * c * c.transpose();
    radius = std::max(radius, m.atoms().col(i).norm());
  }
  out.cov = SymMatrix(cov);
  out.radius = radius;
  return out;
}

DiscreteMeasure make_lattice_ball(int dim, double spacing, int radius_in_steps,
                                  int max_atoms) {
  if (dim < 1 || spacing <= 0.0 || radius_in_steps < 0)
    throw std::invalid_argument("make_lattice_ball: bad parameters");
  const int r = radius_in_steps;
  const long side = 2L * r + 1L;
  double candidates = 1.0;
  for (int i = 0; i < dim; ++i) candidates *= static_cast<double>(side);
  if (candidates > 4.0 * static_cast<double>(max_atoms) * 64.0)
    throw std::invalid_argument("make_lattice_ball: enumeration too large for dim/radius");

  std::vector<Eigen::VectorXd> pts;
  Eigen::VectorXi z = Eigen::VectorXi::Constant(dim, -r);
  const long r2 = static_cast<long>(r) * r;
  while (true) {
    long nrm2 = 0;
    for (int i = 0; i < dim; ++i) nrm2 += static_cast<long>(z[i]) * z[i];
    if (nrm2 <= r2) {
      pts.push_back(spacing * z.cast<double>());
      if (static_cast<int>(pts.size()) > max_atoms)
        throw std::invalid_argument("make_lattice_ball: atom count exceeds cap");
    }
    int pos = 0;
    while (pos < dim && z[pos] == r) z[pos++] = -r;
    if (pos == dim) break;
    ++z[pos];
  }

  Eigen::MatrixXd atoms(dim, static_cast<int>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) atoms.col(static_cast<int>(i)) = pts[i];
  // Centering is exact here: the enumeration is symmetric under negation, so
  // subtracting the float mean removes only rounding residue.
  Eigen::VectorXd mean = atoms.rowwise().mean();
  atoms.colwise() -= mean;
  return DiscreteMeasure(atoms, Eigen::VectorXd::Constant(atoms.cols(),
                                                          1.0 / static_cast<double>(atoms.cols())));
}

DiscreteMeasure isotropize(const DiscreteMeasure& m) {
  const MeasureMoments mm = moments(m);
  SpectralDecomp d = spectral(mm.cov);
  if (d.eigenvalues.minCoeff() <= 1e-10)
    throw std::domain_error("isotropize: singular covariance (degenerate support)");
  const Eigen::MatrixXd inv_sqrt =
      d.apply([](double l) { return 1.0 / std::sqrt(l); });
  Eigen::MatrixXd atoms = inv_sqrt * (m.atoms().colwise() - mm.mean);
  return DiscreteMeasure(atoms, m.weights(), m.is_particle_cloud());
}

MeasureSampler::MeasureSampler(const DiscreteMeasure& m) : m_(&m) {
  cdf_.resize(static_cast<std::size_t>(m.size()));
  double acc = 0.0;
  for (int i = 0; i < m.size(); ++i) {
    acc += m.weights()[i];
    cdf_[static_cast<std::size_t>(i)] = acc;
  }
  cdf_.back() = 1.0;
}

int MeasureSampler::sample_index(RngStream& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                                   static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
}

Eigen::VectorXd MeasureSampler::sample(RngStream& rng) const {
  return m_->atoms().col(sample_index(rng));
}

std::vector<Eigen::VectorXd> sample(const DiscreteMeasure& m, RngStream& rng, int k) {
  if (k < 1) throw std::invalid_argument("sample: k must be >= 1");
  MeasureSampler s(m);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back(s.sample(rng));
  return out;
}

// ---------------------------------------------------------------------------
// Density1d

namespace {
constexpr int kDensityGrid = 1 << 14;
}

Density1d::Density1d(std::string name, std::function<double(double)> potential,
                     double modulus, double lo, double hi)
    : name_(std::move(name)), potential_(std::move(potential)), modulus_(modulus),
      lo_(lo), hi_(hi) {
  if (!(hi_ > lo_)) throw std::invalid_argument("Density1d: empty support");
  if (modulus_ < 0.0) throw std::invalid_argument("Density1d: negative modulus");

  // Declared convexity check on a 1e3-point grid (central differences).
  const int n_check = 1000;
  const double h = (hi_ - lo_) / (n_check + 1) * 0.5;
  for (int i = 1; i <= n_check; ++i) {
    const double u = lo_ + (hi_ - lo_) * i / (n_check + 1);
    const double second =
        (potential_(u + h) - 2.0 * potential_(u) + potential_(u - h)) / (h * h);
    if (second < modulus_ - 1e-6 * (1.0 + std::abs(second)) - 1e-6)
      throw std::invalid_argument("Density1d: potential violates declared convexity modulus");
  }

  build_tables();
}

void Density1d::build_tables() {
  auto tabulate = [&](int n, std::vector<double>& xs, std::vector<double>& pdf,
                      double& z_out, double& mean_out, double& var_out) {
    xs.resize(static_cast<std::size_t>(n));
    pdf.resize(static_cast<std::size_t>(n));
    const double dx = (hi_ - lo_) / (n - 1);
    double max_logp = -std::numeric_limits<double>::infinity();
    std::vector<double> logp(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      xs[static_cast<std::size_t>(i)] = lo_ + dx * i;
      logp[static_cast<std::size_t>(i)] = -potential_(xs[static_cast<std::size_t>(i)] + shift_);
      max_logp = std::max(max_logp, logp[static_cast<std::size_t>(i)]);
    }
    double z = 0.0, m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double p = std::exp(logp[static_cast<std::size_t>(i)] - max_logp);
      const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
      pdf[static_cast<std::size_t>(i)] = p;
      z += w * p;
      m1 += w * p * xs[static_cast<std::size_t>(i)];
      m2 += w * p * xs[static_cast<std::size_t>(i)] * xs[static_cast<std::size_t>(i)];
    }
    z *= dx;
    mean_out = m1 * dx / z;
    var_out = m2 * dx / z - mean_out * mean_out;
    for (auto& p : pdf) p /= z;
    z_out = z * std::exp(max_logp);
  };

  // Recentre so the tabulated law has mean 0, then tabulate at full
  // resolution with a half-resolution pass for the convergence check.
  std::vector<double> xs, pdf;
  double z, mean, var;
  tabulate(kDensityGrid, xs, pdf, z, mean, var);
  shift_ = mean;
  lo_ -= mean;
  hi_ -= mean;

  double z_half, mean_half, var_half;
  std::vector<double> xs_h, pdf_h;
  tabulate(kDensityGrid / 2, xs_h, pdf_h, z_half, mean_half, var_half);
  tabulate(kDensityGrid, xs, pdf, z, mean, var);
  if (std::abs(z - z_half) > 1e-8 * std::abs(z))
    throw std::runtime_error("Density1d: quadrature non-convergence (normalization)");

  grid_x_ = std::move(xs);
  grid_pdf_ = std::move(pdf);
  normalization_ = z;
  mean_ = mean;
  variance_ = var;

  grid_cdf_.resize(grid_x_.size());
  const double dx = (hi_ - lo_) / (kDensityGrid - 1);
  double acc = 0.0;
  grid_cdf_[0] = 0.0;
  for (std::size_t i = 1; i < grid_x_.size(); ++i) {
    acc += 0.5 * (grid_pdf_[i - 1] + grid_pdf_[i]) * dx;
    grid_cdf_[i] = acc;
  }
  for (auto& c : grid_cdf_) c /= acc;
  grid_cdf_.back() = 1.0;
}

double Density1d::pdf(double u) const {
  if (u < lo_ || u > hi_) return 0.0;
  return std::exp(-potential_(u + shift_)) / normalization_;
}

double Density1d::log_unnormalized(double u) const { return -potential_(u + shift_); }

double Density1d::inverse_cdf(double p) const {
  p = std::clamp(p, 0.0, 1.0);
  const auto it = std::lower_bound(grid_cdf_.begin(), grid_cdf_.end(), p);
  if (it == grid_cdf_.begin()) return grid_x_.front();
  const std::size_t j = static_cast<std::size_t>(it - grid_cdf_.begin());
  if (j >= grid_x_.size()) return grid_x_.back();
  const double c0 = grid_cdf_[j - 1], c1 = grid_cdf_[j];
  const double t = (c1 > c0) ? (p - c0) / (c1 - c0) : 0.0;
  return grid_x_[j - 1] + t * (grid_x_[j] - grid_x_[j - 1]);
}

namespace {

std::vector<double> parse_params(const std::string& spec, std::string& name) {
  const auto open = spec.find('(');
  std::vector<double> params;
  if (open == std::string::npos) {
    name = spec;
    return params;
  }
  const auto close = spec.rfind(')');
  if (close == std::string::npos || close < open)
    throw std::invalid_argument("Density1d::parse: unbalanced parentheses in '" + spec + "'");
  name = spec.substr(0, open);
  std::string inner = spec.substr(open + 1, close - open - 1);
  std::size_t pos = 0;
  while (pos < inner.size()) {
    std::size_t next = inner.find(',', pos);
    if (next == std::string::npos) next = inner.size();
    params.push_back(std::stod(inner.substr(pos, next - pos)));
    pos = next + 1;
  }
  return params;
}

}  // namespace

Density1d Density1d::parse(const std::string& spec) {
  std::string name;
  const std::vector<double> p = parse_params(spec, name);
  if (name == "gauss") {
    const double var = p.empty() ? 1.0 : p[0];
    if (!(var > 0.0)) throw std::invalid_argument("gauss: variance must be positive");
    const double half = 10.0 * std::sqrt(var);
    return Density1d(spec, [var](double u) { return u * u / (2.0 * var); }, 1.0 / var,
                     -half, half);
  }
  if (name == "gauss_logcosh") {
    const double a = p.empty() ? 1.0 : p[0];
    const double s = p.size() > 1 ? p[1] : 1.0;
    if (a < 0.0) throw std::invalid_argument("gauss_logcosh: amplitude must be >= 0");
    auto pot = [a, s](double u) {
      const double v = u - s;
      // log cosh(v) computed overflow-safe
      return 0.5 * u * u + a * (std::abs(v) + std::log1p(std::exp(-2.0 * std::abs(v))) -
                                std::log(2.0));
    };
    return Density1d(spec, pot, 1.0, -12.0 + s, 12.0 + s);
  }
  if (name == "uniform") {
    const double half = p.empty() ? std::sqrt(3.0) : p[0];
    if (!(half > 0.0)) throw std::invalid_argument("uniform: half width must be positive");
    return Density1d(spec, [](double) { return 0.0; }, 0.0, -half, half);
  }
  throw std::invalid_argument("Density1d::parse: unknown family '" + name + "'");
}

DiscreteMeasure particle_cloud_product(const Density1d& f, int dim, int n_particles,
                                       RngStream& rng) {
  if (n_particles < 2) throw std::invalid_argument("particle_cloud_product: N must be >= 2");
  if (dim < 1) throw std::invalid_argument("particle_cloud_product: dim must be >= 1");
  Eigen::MatrixXd atoms(dim, n_particles);
  for (int i = 0; i < n_particles; ++i)
    for (int r = 0; r < dim; ++r) atoms(r, i) = f.inverse_cdf(rng.uniform());
  return DiscreteMeasure(atoms,
                         Eigen::VectorXd::Constant(n_particles, 1.0 / n_particles),
                         /*is_particle_cloud=*/true);
}

}  // namespace cltlab
