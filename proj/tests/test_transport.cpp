#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cltlab/stats.hpp"
#include "cltlab/transport.hpp"

using namespace cltlab;

namespace {

PointSet random_points(RngStream& rng, int d, int k, double scale = 1.0) {
  PointSet out(d, k);
  for (int i = 0; i < k; ++i) out.col(i) = scale * rng.normal_vector(d);
  return out;
}

}  // namespace

TEST_CASE("exact assignment: identical inputs give zero") {
  RngStream rng(1);
  const PointSet xs = random_points(rng, 2, 32);
  const W2Estimate est = w2_exact_assignment(xs, xs);
  CHECK(est.value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("exact assignment in 1-d is the sorted matching") {
  PointSet xs(1, 2), ys(1, 2);
  xs << 0.0, 2.0;
  ys << 1.0, 3.0;
  CHECK(w2_exact_assignment(xs, ys).value == doctest::Approx(1.0));
}

TEST_CASE("exact assignment equals brute force on k <= 8 (oracle route)") {
  RngStream rng(2);
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 2 + static_cast<int>(rng.raw() % 7);
    const int d = 1 + static_cast<int>(rng.raw() % 3);
    const PointSet xs = random_points(rng, d, k);
    const PointSet ys = random_points(rng, d, k);
    const double exact = w2_exact_assignment(xs, ys, 1, 0).value;
    const double brute = w2_brute_force(xs, ys).value;
    CHECK(std::abs(exact - brute) <= 1e-12);
  }
}

TEST_CASE("exact assignment symmetry") {
  RngStream rng(3);
  const PointSet xs = random_points(rng, 3, 64);
  const PointSet ys = random_points(rng, 3, 64);
  CHECK(std::abs(w2_exact_assignment(xs, ys, 1, 0).value -
                 w2_exact_assignment(ys, xs, 1, 0).value) < 1e-12);
}

TEST_CASE("exact assignment triangle sanity") {
  RngStream rng(4);
  const PointSet xs = random_points(rng, 2, 24);
  const PointSet ys = random_points(rng, 2, 24, 1.5);
  const PointSet zs = random_points(rng, 2, 24, 0.5);
  const double xy = w2_exact_assignment(xs, ys, 1, 0).value;
  const double yz = w2_exact_assignment(ys, zs, 1, 0).value;
  const double xz = w2_exact_assignment(xs, zs, 1, 0).value;
  CHECK(xz <= xy + yz + 1e-9);
}

TEST_CASE("exact assignment rejects bad shapes") {
  RngStream rng(5);
  const PointSet xs = random_points(rng, 2, 8);
  const PointSet ys = random_points(rng, 2, 9);
  CHECK_THROWS_AS(w2_exact_assignment(xs, ys), std::invalid_argument);
  const PointSet big_x = random_points(rng, 1, 4097);
  const PointSet big_y = random_points(rng, 1, 4097);
  CHECK_THROWS_AS(w2_exact_assignment(big_x, big_y), std::invalid_argument);
}

TEST_CASE("solve_assignment on a concrete matrix") {
  Eigen::MatrixXd cost(3, 3);
  cost << 4, 1, 3,
          2, 0, 5,
          3, 2, 2;
  double total = 0.0;
  const std::vector<int> match = solve_assignment(cost, &total);
  CHECK(total == doctest::Approx(5.0));  // 1 + 2 + 2
  CHECK(match[0] == 1);
  CHECK(match[1] == 0);
  CHECK(match[2] == 2);
}

TEST_CASE("w2 quantile formula vs sorted matching on equal-weight atoms") {
  // the 1-d discrete-vs-gaussian integral cross-checked by large-sample
  // assignment between the discrete law and gaussian draws
  std::vector<double> xs = {-1.0, 0.0, 2.0};
  std::vector<double> ws = {0.25, 0.5, 0.25};
  const double closed = w2_discrete_gaussian_1d(xs, ws, 1.2);
  // Monte Carlo upper estimate via quantile coupling on a fine grid
  const int k = 200000;
  double acc = 0.0;
  for (int i = 0; i < k; ++i) {
    const double u = (i + 0.5) / k;
    const double q_gauss = 1.2 * normal_quantile(u);
    double q_disc;
    if (u < 0.25) q_disc = -1.0;
    else if (u < 0.75) q_disc = 0.0;
    else q_disc = 2.0;
    acc += (q_disc - q_gauss) * (q_disc - q_gauss);
  }
  CHECK(closed == doctest::Approx(std::sqrt(acc / k)).epsilon(1e-3));
}

TEST_CASE("sinkhorn: self distance is near zero after debiasing") {
  RngStream rng(6);
  const PointSet xs = random_points(rng, 2, 48);
  const W2Estimate est = w2_sinkhorn(xs, xs);
  CHECK(est.value <= 1e-6);
}

TEST_CASE("sinkhorn agrees with exact assignment at small epsilon") {
  RngStream rng(7);
  const PointSet xs = random_points(rng, 2, 64);
  const PointSet ys = random_points(rng, 2, 64, 1.4);
  const double exact = w2_exact_assignment(xs, ys, 1, 0).value;
  Eigen::MatrixXd cost(64, 64);
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) cost(i, j) = (xs.col(i) - ys.col(j)).squaredNorm();
  std::vector<double> all(cost.data(), cost.data() + cost.size());
  const double eps = 0.01 * median(std::move(all));
  const double entropic = w2_sinkhorn(xs, ys, eps, 200000).value;
  CHECK(entropic == doctest::Approx(exact).epsilon(0.05));
  CHECK(exact <= entropic * 1.05 + 1e-9);
}

TEST_CASE("sinkhorn epsilon sweep drifts slowly") {
  RngStream rng(8);
  const PointSet xs = random_points(rng, 2, 48);
  const PointSet ys = random_points(rng, 2, 48, 1.3);
  Eigen::MatrixXd cost(48, 48);
  for (int i = 0; i < 48; ++i)
    for (int j = 0; j < 48; ++j) cost(i, j) = (xs.col(i) - ys.col(j)).squaredNorm();
  std::vector<double> all(cost.data(), cost.data() + cost.size());
  const double eps0 = 0.04 * median(std::move(all));
  const double v0 = w2_sinkhorn(xs, ys, eps0, 200000).value;
  const double v1 = w2_sinkhorn(xs, ys, eps0 / 2, 200000).value;
  const double v2 = w2_sinkhorn(xs, ys, eps0 / 4, 200000).value;
  CHECK(std::abs(v1 - v0) <= 0.05 * v0);
  CHECK(std::abs(v2 - v1) <= 0.05 * v1);
}

TEST_CASE("sinkhorn reports non-convergence") {
  RngStream rng(9);
  const PointSet xs = random_points(rng, 2, 32);
  const PointSet ys = random_points(rng, 2, 32, 2.0);
  CHECK_THROWS_AS(w2_sinkhorn(xs, ys, 1e-6, 0), std::runtime_error);
}

TEST_CASE("gaussian closed form: equal covariances and commuting case") {
  RngStream rng(10);
  Eigen::MatrixXd m(2, 3);
  for (int i = 0; i < 3; ++i) m.col(i) = rng.normal_vector(2);
  const SymMatrix s(Eigen::MatrixXd(m * m.transpose()));
  CHECK(w2_gaussian_closed_form(s, s) == doctest::Approx(0.0).epsilon(1e-9));

  const SymMatrix a(Eigen::MatrixXd(Eigen::Vector2d(4.0, 4.0).asDiagonal()));
  const SymMatrix b(Eigen::MatrixXd(Eigen::Vector2d(1.0, 1.0).asDiagonal()));
  CHECK(w2_gaussian_closed_form(a, b) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("gaussian closed form agrees with floor-debiased sampling within 10%") {
  Eigen::MatrixXd s1m(2, 2), s2m(2, 2);
  s1m << 2.0, 0.3, 0.3, 0.8;
  s2m << 1.0, -0.2, -0.2, 1.5;
  const SymMatrix s1(s1m), s2(s2m);
  const double closed = w2_gaussian_closed_form(s1, s2);
  RngStream ra(11), rb(12);
  const double sampled =
      w2_exact_assignment(sample_gaussian(s1, 2048, ra), sample_gaussian(s2, 2048, rb), 13).value;
  RngStream rc(14), rd(15);
  const double floor =
      w2_exact_assignment(sample_gaussian(s1, 2048, rc), sample_gaussian(s1, 2048, rd), 16).value;
  const double deb = std::sqrt(std::max(sampled * sampled - floor * floor, 0.0));
  CHECK(std::abs(deb - closed) / closed <= 0.10);
}

TEST_CASE("coupling upper bound basics") {
  std::vector<CoupledPair> pairs(200);
  Eigen::VectorXd one(2);
  one << 1.0, 0.0;
  for (auto& p : pairs) {
    p.s_n = one;
    p.g = Eigen::VectorXd::Zero(2);
    p.n = 4;
  }
  const W2Estimate est = w2_upper_from_coupling(pairs);
  CHECK(est.value == doctest::Approx(1.0));
  for (auto& p : pairs) p.g = one;
  CHECK(w2_upper_from_coupling(pairs).value == doctest::Approx(0.0));
  pairs.resize(50);
  CHECK_THROWS_AS(w2_upper_from_coupling(pairs), std::invalid_argument);
}

TEST_CASE("estimator ordering: exact below coupling-style upper estimates") {
  // exact assignment between the two marginal clouds never exceeds the
  // diagonal pairing cost on the same clouds
  RngStream rng(14);
  const int k = 128;
  const PointSet xs = random_points(rng, 2, k);
  const PointSet ys = random_points(rng, 2, k, 1.2);
  const double exact = w2_exact_assignment(xs, ys, 1, 0).value;
  double diag_cost = 0.0;
  for (int i = 0; i < k; ++i) diag_cost += (xs.col(i) - ys.col(i)).squaredNorm();
  CHECK(exact <= std::sqrt(diag_cost / k) + 1e-12);
}

TEST_CASE("same-distribution floor is positive and reported") {
  RngStream ra(15), rb(16);
  const SymMatrix id = SymMatrix::identity(4);
  const PointSet a = sample_gaussian(id, 1024, ra);
  const PointSet b = sample_gaussian(id, 1024, rb);
  const W2Estimate floor = w2_exact_assignment(a, b, 17);
  CHECK(floor.value > 0.1);  // d = 4 finite-sample floor is material
  CHECK(floor.ci_halfwidth > 0.0);
}
