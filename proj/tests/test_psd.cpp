#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "cltlab/psd.hpp"
#include "cltlab/rng.hpp"

using namespace cltlab;

namespace {

Eigen::MatrixXd random_psd(RngStream& rng, int d, int r) {
  Eigen::MatrixXd m(d, r);
  for (int j = 0; j < r; ++j) m.col(j) = rng.normal_vector(d);
  return m * m.transpose();
}

}  // namespace

TEST_CASE("SymMatrix symmetrizes and rejects gross asymmetry") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 2.0 + 1e-12, 2.0, 3.0;
  SymMatrix s(m);
  CHECK(s.mat()(0, 1) == doctest::Approx(s.mat()(1, 0)));
  m(0, 1) = 2.1;
  CHECK_THROWS_AS(SymMatrix{m}, std::invalid_argument);
}

TEST_CASE("psd_sqrt on identity and diagonal") {
  CHECK((psd_sqrt(SymMatrix::identity(3)).mat() - Eigen::MatrixXd::Identity(3, 3)).norm() ==
        doctest::Approx(0.0).epsilon(1e-12));
  Eigen::MatrixXd d2 = Eigen::Vector2d(4.0, 9.0).asDiagonal();
  const Eigen::MatrixXd r = psd_sqrt(SymMatrix(d2)).mat();
  CHECK(r(0, 0) == doctest::Approx(2.0));
  CHECK(r(1, 1) == doctest::Approx(3.0));
  CHECK(std::abs(r(0, 1)) < 1e-14);
}

TEST_CASE("psd_sqrt reconstruction on random PSD, d=6") {
  RngStream rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd a = random_psd(rng, 6, 6);
    const SymMatrix s(a);
    const Eigen::MatrixXd root = psd_sqrt(s).mat();
    CHECK((root * root - a).norm() <= 1e-8 * (1.0 + a.norm()));
  }
}

TEST_CASE("psd_sqrt rejects clearly non-PSD input") {
  Eigen::MatrixXd m = Eigen::Vector2d(1.0, -0.5).asDiagonal();
  CHECK_THROWS_AS(psd_sqrt(SymMatrix(m)), std::domain_error);
}

TEST_CASE("psd_sqrt scaling homogeneity") {
  RngStream rng(12);
  const Eigen::MatrixXd a = random_psd(rng, 5, 5);
  const Eigen::MatrixXd root = psd_sqrt(SymMatrix(a)).mat();
  for (double c : {0.25, 1.0, 4.0}) {
    const Eigen::MatrixXd scaled = psd_sqrt(SymMatrix(Eigen::MatrixXd(c * a))).mat();
    CHECK((scaled - std::sqrt(c) * root).norm() <= 1e-9 * (1.0 + root.norm()));
  }
}

TEST_CASE("pseudo_inverse basics") {
  Eigen::MatrixXd d2 = Eigen::Vector2d(2.0, 0.0).asDiagonal();
  const Eigen::MatrixXd pinv = pseudo_inverse(SymMatrix(d2)).mat();
  CHECK(pinv(0, 0) == doctest::Approx(0.5));
  CHECK(pinv(1, 1) == doctest::Approx(0.0));
  CHECK((pseudo_inverse(SymMatrix::identity(4)).mat() - Eigen::MatrixXd::Identity(4, 4)).norm() <
        1e-12);
}

TEST_CASE("pseudo_inverse of a rank-2 PSD gives a rank-2 projection") {
  RngStream rng(13);
  const Eigen::MatrixXd a = random_psd(rng, 4, 2);
  const SymMatrix s(a);
  const Eigen::MatrixXd proj = a * pseudo_inverse(s).mat();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (proj + proj.transpose()));
  int ones = 0, zeros = 0;
  for (int i = 0; i < 4; ++i) {
    if (std::abs(es.eigenvalues()[i] - 1.0) < 1e-8) ++ones;
    if (std::abs(es.eigenvalues()[i]) < 1e-8) ++zeros;
  }
  CHECK(ones == 2);
  CHECK(zeros == 2);
}

TEST_CASE("pseudo_inverse is an involution on the range") {
  RngStream rng(14);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd a = random_psd(rng, 5, 3);
    const SymMatrix s(a);
    const Eigen::MatrixXd back = pseudo_inverse(pseudo_inverse(s)).mat();
    const Eigen::MatrixXd proj = a * pseudo_inverse(s).mat();
    CHECK((back - proj * a).norm() <= 1e-7 * (1.0 + a.norm()));
  }
}

TEST_CASE("capped_inverse eigenvalue map") {
  Eigen::MatrixXd d3 = Eigen::Vector3d(4.0, 0.25, 0.0).asDiagonal();
  const Eigen::MatrixXd c = capped_inverse(SymMatrix(d3)).mat();
  CHECK(c(0, 0) == doctest::Approx(0.25));
  CHECK(c(1, 1) == doctest::Approx(1.0));
  CHECK(c(2, 2) == doctest::Approx(0.0));
  CHECK((capped_inverse(SymMatrix::identity(2)).mat() - Eigen::MatrixXd::Identity(2, 2)).norm() <
        1e-12);
  Eigen::MatrixXd small = Eigen::VectorXd::Constant(1, 0.1).asDiagonal();
  CHECK(capped_inverse(SymMatrix(small)).mat()(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("capped_inverse dominated by pseudo_inverse and by identity") {
  RngStream rng(15);
  for (int rep = 0; rep < 50; ++rep) {
    const int d = 2 + static_cast<int>(rng.raw() % 5);
    const Eigen::MatrixXd a = random_psd(rng, d, d);
    const SymMatrix s(a);
    const Eigen::MatrixXd capped = capped_inverse(s).mat();
    const Eigen::MatrixXd pinv = pseudo_inverse(s).mat();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> diff1(pinv - capped);
    CHECK(diff1.eigenvalues().minCoeff() >= -1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> diff2(Eigen::MatrixXd::Identity(d, d) -
                                                         capped);
    CHECK(diff2.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("sqrt_diff_trace_pair examples") {
  SUBCASE("A = B gives (0, 0)") {
    RngStream rng(16);
    const Eigen::MatrixXd a = random_psd(rng, 3, 3);
    const auto [lhs, rhs] = sqrt_diff_trace_pair(SymMatrix(a), SymMatrix(a));
    CHECK(std::abs(lhs) < 1e-10);
    CHECK(std::abs(rhs) < 1e-10);
  }
  SUBCASE("scalar 4 vs 1") {
    Eigen::MatrixXd a = Eigen::VectorXd::Constant(1, 4.0).asDiagonal();
    Eigen::MatrixXd b = Eigen::VectorXd::Constant(1, 1.0).asDiagonal();
    const auto [lhs, rhs] = sqrt_diff_trace_pair(SymMatrix(a), SymMatrix(b));
    CHECK(lhs == doctest::Approx(1.0));
    CHECK(rhs == doctest::Approx(9.0 / 4.0));
  }
}

TEST_CASE("sqrt_diff_trace_pair rejects kernel violations") {
  Eigen::MatrixXd a = Eigen::Vector2d(1.0, 0.0).asDiagonal();
  Eigen::MatrixXd b = Eigen::Vector2d(1.0, 1.0).asDiagonal();
  CHECK_THROWS_AS(sqrt_diff_trace_pair(SymMatrix(a), SymMatrix(b)), std::invalid_argument);
}

TEST_CASE("trace inequality holds on random pairs (property)") {
  RngStream rng(17);
  for (int rep = 0; rep < 1000; ++rep) {
    const int d = 2 + static_cast<int>(rng.raw() % 7);
    const bool deficient = (rng.raw() & 1) != 0;
    const int r = deficient ? 1 + static_cast<int>(rng.raw() % (d - 1)) : d + 2;
    const Eigen::MatrixXd a = random_psd(rng, d, r);
    const SymMatrix s(a);
    const Eigen::MatrixXd proj = a * pseudo_inverse(s).mat();
    const Eigen::MatrixXd bump = proj * random_psd(rng, d, d) * proj.transpose();
    const SymMatrix b(Eigen::MatrixXd(a + 0.5 * (bump + bump.transpose())));
    const auto [lhs, rhs] = sqrt_diff_trace_pair(s, b);
    CHECK(lhs <= rhs + 1e-8 * (1.0 + rhs));
  }
}

TEST_CASE("500 random pairs, both traces evaluated from the definitions") {
  RngStream rng(18);
  for (int rep = 0; rep < 500; ++rep) {
    const Eigen::MatrixXd a = random_psd(rng, 5, 5);
    const SymMatrix s(a);
    const Eigen::MatrixXd proj = a * pseudo_inverse(s).mat();
    const Eigen::MatrixXd bump = proj * random_psd(rng, 5, 5) * proj.transpose();
    const Eigen::MatrixXd b = a + 0.5 * (bump + bump.transpose());
    const auto [lhs, rhs] = sqrt_diff_trace_pair(s, SymMatrix(b));
    const Eigen::MatrixXd ra = psd_sqrt(s).mat();
    const Eigen::MatrixXd rb = psd_sqrt(SymMatrix(b)).mat();
    const double lhs_direct = ((ra - rb) * (ra - rb)).trace();
    const double rhs_direct = ((a - b) * (a - b) * pseudo_inverse(s).mat()).trace();
    CHECK(lhs == doctest::Approx(lhs_direct).epsilon(1e-9));
    CHECK(rhs == doctest::Approx(rhs_direct).epsilon(1e-9));
    CHECK(lhs <= rhs + 1e-8 * (1.0 + rhs));
  }
}
