#include "cltlab/psd.hpp"

#include <algorithm>
#include <cmath>

namespace cltlab {

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("SymMatrix: not square");
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-10 * scale))
    throw std::invalid_argument("SymMatrix: input asymmetry exceeds tolerance");
  m_ = 0.5 * (m + m.transpose());
}

SpectralDecomp spectral(const SymMatrix& a, double cutoff) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.mat());
  if (es.info() != Eigen::Success) throw std::runtime_error("spectral: eigensolver failed");
  SpectralDecomp d;
  d.eigenvalues = es.eigenvalues();
  d.eigenvectors = es.eigenvectors();
  const double op = d.eigenvalues.cwiseAbs().maxCoeff();
  d.cutoff = cutoff >= 0.0 ? cutoff : default_cutoff(op);
  return d;
}

double op_norm(const SymMatrix& a) {
  return spectral(a).eigenvalues.cwiseAbs().maxCoeff();
}

namespace {

void require_near_psd(const SpectralDecomp& d, const char* who) {
  const double op = d.eigenvalues.cwiseAbs().maxCoeff();
  const double min_eig = d.eigenvalues.minCoeff();
  if (min_eig < -1e-8 * op && min_eig < -1e-14)
    throw std::domain_error(std::string(who) + ": eigenvalue below near-PSD tolerance");
}

}  // namespace

SymMatrix psd_sqrt(const SymMatrix& a) {
  SpectralDecomp d = spectral(a);
  require_near_psd(d, "psd_sqrt");
  return SymMatrix(d.apply([](double l) { return l > 0.0 ? std::sqrt(l) : 0.0; }));
}

SymMatrix pseudo_inverse(const SymMatrix& a, double cutoff) {
  SpectralDecomp d = spectral(a, cutoff);
  require_near_psd(d, "pseudo_inverse");
  const double c = d.cutoff;
  return SymMatrix(d.apply([c](double l) { return l > c ? 1.0 / l : 0.0; }));
}

SymMatrix capped_inverse(const SymMatrix& a, double cutoff) {
  SpectralDecomp d = spectral(a, cutoff);
  require_near_psd(d, "capped_inverse");
  const double c = d.cutoff;
  return SymMatrix(d.apply([c](double l) { return l > c ? std::min(1.0 / l, 1.0) : 0.0; }));
}

std::pair<double, double> sqrt_diff_trace_pair(const SymMatrix& a, const SymMatrix& b) {
  SpectralDecomp da = spectral(a);
  require_near_psd(da, "sqrt_diff_trace_pair(A)");
  SpectralDecomp db = spectral(b);
  require_near_psd(db, "sqrt_diff_trace_pair(B)");

  // Kernel inclusion ker(A) subset of ker(B).
  for (int i = 0; i < da.eigenvalues.size(); ++i) {
    if (da.eigenvalues[i] <= da.cutoff) {
      const double bv = (b.mat() * da.eigenvectors.col(i)).norm();
      if (bv > 1e-6)
        throw std::invalid_argument("sqrt_diff_trace_pair: ker(A) not contained in ker(B)");
    }
  }

  const Eigen::MatrixXd sa = da.apply([](double l) { return l > 0.0 ? std::sqrt(l) : 0.0; });
  const Eigen::MatrixXd sb = db.apply([](double l) { return l > 0.0 ? std::sqrt(l) : 0.0; });
  const Eigen::MatrixXd diff_sqrt = sa - sb;
  const double lhs = (diff_sqrt * diff_sqrt).trace();

  const double ca = da.cutoff;
  const Eigen::MatrixXd a_dagger = da.apply([ca](double l) { return l > ca ? 1.0 / l : 0.0; });
  const Eigen::MatrixXd diff = a.mat() - b.mat();
  const double rhs = (diff * diff * a_dagger).trace();
  return {lhs, rhs};
}

}  // namespace cltlab
