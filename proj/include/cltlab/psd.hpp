#pragma once
// Symmetric/PSD matrix primitives: square roots, pseudo-inverses, capped
// inverses and the paired trace inequality check. All functions go through
// one symmetric eigendecomposition; dimensions stay small (d <= ~32) so
// exactness beats iterative schemes.

#include <stdexcept>
#include <utility>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace cltlab {

class SymMatrix {
 public:
  SymMatrix() = default;
  // Symmetrized at construction; asymmetric noise beyond 1e-10 (relative)
  // is rejected as a caller bug.
  explicit SymMatrix(const Eigen::MatrixXd& m);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& mat() const { return m_; }

  double trace() const { return m_.trace(); }
  double hs_norm() const { return m_.norm(); }

  static SymMatrix identity(int d) { return SymMatrix(Eigen::MatrixXd::Identity(d, d)); }
  static SymMatrix zero(int d) { return SymMatrix(Eigen::MatrixXd::Zero(d, d)); }

 private:
  Eigen::MatrixXd m_;
};

struct SpectralDecomp {
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors;
  double cutoff = 0.0;  // eigenvalues <= cutoff are treated as zero

  // Q f(Lambda) Q^T with f applied eigenvalue-wise.
  template <class F>
  Eigen::MatrixXd apply(F f) const {
    Eigen::VectorXd mapped(eigenvalues.size());
    for (int i = 0; i < eigenvalues.size(); ++i) mapped[i] = f(eigenvalues[i]);
    return eigenvectors * mapped.asDiagonal() * eigenvectors.transpose();
  }
};

// Default relative cutoff used to classify zero eigenvalues.
inline double default_cutoff(double op_norm) { return 1e-10 * op_norm; }

SpectralDecomp spectral(const SymMatrix& a, double cutoff = -1.0);

double op_norm(const SymMatrix& a);

// Eigenvalues clamped at 0 then square-rooted; rejects inputs with an
// eigenvalue below -1e-8 * ||A||_op.
SymMatrix psd_sqrt(const SymMatrix& a);

// Eigenvalues <= cutoff map to 0, the rest are inverted. cutoff < 0 selects
// the relative default.
SymMatrix pseudo_inverse(const SymMatrix& a, double cutoff = -1.0);

// Same eigenbasis as A; eigenvalue map lambda -> min(1/lambda, 1) above the
// cutoff, 0 otherwise.
SymMatrix capped_inverse(const SymMatrix& a, double cutoff = -1.0);

// (Tr((sqrt A - sqrt B)^2), Tr((A - B)^2 A^dagger)). Requires ker(A) to be
// contained in ker(B): ||B v|| <= 1e-6 for each near-null eigenvector v of A.
std::pair<double, double> sqrt_diff_trace_pair(const SymMatrix& a, const SymMatrix& b);

}  // namespace cltlab
