#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cltlab/measure.hpp"
#include "cltlab/stats.hpp"

using namespace cltlab;

TEST_CASE("moments of symmetric two-point measure") {
  const DiscreteMeasure m = DiscreteMeasure::two_point(1.0);
  const MeasureMoments mm = moments(m);
  CHECK(mm.mean.norm() == doctest::Approx(0.0));
  CHECK(mm.cov.mat()(0, 0) == doctest::Approx(1.0));
  CHECK(mm.radius == doctest::Approx(1.0));
}

TEST_CASE("moments of a point mass") {
  Eigen::VectorXd x(2);
  x << 3.0, 4.0;
  const MeasureMoments mm = moments(DiscreteMeasure::point_mass(x));
  CHECK(mm.mean(0) == doctest::Approx(3.0));
  CHECK(mm.mean(1) == doctest::Approx(4.0));
  CHECK(mm.cov.mat().norm() == doctest::Approx(0.0));
  CHECK(mm.radius == doctest::Approx(5.0));
}

TEST_CASE("two-point variance pq(b-a)^2") {
  Eigen::MatrixXd atoms(1, 2);
  atoms << 0.0, 1.0;
  Eigen::VectorXd w(2);
  w << 0.75, 0.25;
  const MeasureMoments mm = moments(DiscreteMeasure(atoms, w));
  CHECK(mm.mean(0) == doctest::Approx(0.25));
  CHECK(mm.cov.mat()(0, 0) == doctest::Approx(3.0 / 16.0));
}

TEST_CASE("constructor merges duplicate atoms and normalizes") {
  Eigen::MatrixXd atoms(1, 3);
  atoms << 1.0, 1.0, 2.0;
  Eigen::VectorXd w(3);
  w << 1.0, 2.0, 1.0;
  const DiscreteMeasure m(atoms, w);
  CHECK(m.size() == 2);
  CHECK(m.weights()(0) == doctest::Approx(0.75));
  CHECK(m.weights()(1) == doctest::Approx(0.25));
  CHECK(m.weights().sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("constructor rejects bad input") {
  Eigen::MatrixXd atoms(1, 2);
  atoms << 0.0, 1.0;
  Eigen::VectorXd neg(2);
  neg << -0.1, 1.1;
  CHECK_THROWS(DiscreteMeasure(atoms, neg));
  Eigen::VectorXd nanw(2);
  nanw << std::nan(""), 1.0;
  CHECK_THROWS(DiscreteMeasure(atoms, nanw));
}

TEST_CASE("lattice ball d=1") {
  const DiscreteMeasure m = make_lattice_ball(1, 1.0, 1);
  CHECK(m.size() == 3);
  CHECK(m.weights()(0) == doctest::Approx(1.0 / 3));
  CHECK(moments(m).mean.norm() <= 1e-12);
}

TEST_CASE("lattice ball d=2 radius 1 is the 5-atom cross") {
  const DiscreteMeasure m = make_lattice_ball(2, 1.0, 1);
  CHECK(m.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(m.weights()(i) == doctest::Approx(0.2));
  CHECK(moments(m).mean.norm() <= 1e-12);
}

TEST_CASE("lattice ball cov by enumeration: d=1, spacing 2, radius 2") {
  const DiscreteMeasure m = make_lattice_ball(1, 2.0, 2);
  CHECK(m.size() == 5);
  // direct enumeration: (16+4+0+4+16)/5
  double direct = 0.0;
  for (int i = 0; i < m.size(); ++i)
    direct += m.weights()(i) * m.atoms()(0, i) * m.atoms()(0, i);
  CHECK(direct == doctest::Approx(8.0));
  CHECK(moments(m).cov.mat()(0, 0) == doctest::Approx(8.0));
}

TEST_CASE("lattice ball centering exact and radius bound") {
  for (int d : {1, 2, 3}) {
    const DiscreteMeasure m = make_lattice_ball(d, 0.5, 2);
    CHECK(moments(m).mean.norm() <= 1e-12);
    CHECK(moments(m).radius <= 0.5 * (2 + d) + 1e-12);
  }
}

TEST_CASE("lattice ball rejects oversized enumerations") {
  CHECK_THROWS_AS(make_lattice_ball(2, 1.0, 4, /*max_atoms=*/10), std::invalid_argument);
}

TEST_CASE("isotropize fixed point and shift/scale") {
  const DiscreteMeasure tp = DiscreteMeasure::two_point(1.0);
  const DiscreteMeasure iso = isotropize(tp);
  CHECK((iso.atoms() - tp.atoms()).cwiseAbs().maxCoeff() <= 1e-12);

  Eigen::MatrixXd atoms(1, 2);
  atoms << 0.0, 2.0;
  const DiscreteMeasure shifted(atoms, Eigen::VectorXd::Constant(2, 0.5));
  const DiscreteMeasure out = isotropize(shifted);
  CHECK(out.atoms()(0, 0) == doctest::Approx(-1.0));
  CHECK(out.atoms()(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("isotropize random 3-d cloud has exact moments afterwards") {
  RngStream rng(21);
  Eigen::MatrixXd atoms(3, 40);
  for (int i = 0; i < 40; ++i)
    atoms.col(i) = rng.normal_vector(3) + Eigen::Vector3d(1.0, -2.0, 0.5);
  const DiscreteMeasure m(atoms, Eigen::VectorXd::Constant(40, 1.0 / 40));
  const MeasureMoments mm = moments(isotropize(m));
  CHECK(mm.mean.norm() <= 1e-8);
  CHECK((mm.cov.mat() - Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-8);
}

TEST_CASE("isotropize rejects degenerate support") {
  Eigen::MatrixXd atoms(2, 2);  // both atoms on the x-axis
  atoms << -1.0, 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(isotropize(DiscreteMeasure(atoms, Eigen::VectorXd::Constant(2, 0.5))),
                  std::domain_error);
}

TEST_CASE("sampler determinism and point-mass sampling") {
  Eigen::VectorXd x(1);
  x << 7.0;
  const DiscreteMeasure pm = DiscreteMeasure::point_mass(x);
  RngStream r1(5), r2(5);
  const auto a = sample(pm, r1, 5);
  for (const auto& v : a) CHECK(v(0) == doctest::Approx(7.0));
  const DiscreteMeasure m = make_lattice_ball(1, 1.0, 2);
  RngStream s1(9), s2(9);
  const auto xs = sample(m, s1, 100);
  const auto ys = sample(m, s2, 100);
  for (int i = 0; i < 100; ++i) CHECK(xs[static_cast<std::size_t>(i)](0) == ys[static_cast<std::size_t>(i)](0));
}

TEST_CASE("sample frequencies match weights (binomial CI)") {
  Eigen::MatrixXd atoms(1, 2);
  atoms << 0.0, 1.0;
  Eigen::VectorXd w(2);
  w << 0.75, 0.25;
  const DiscreteMeasure m(atoms, w);
  RngStream rng(33);
  int ones = 0;
  const int k = 100000;
  MeasureSampler sampler(m);
  for (int i = 0; i < k; ++i)
    if (sampler.sample(rng)(0) > 0.5) ++ones;
  const double freq = static_cast<double>(ones) / k;
  CHECK(freq >= 0.24);
  CHECK(freq <= 0.26);
}

TEST_CASE("sample frequencies across many seeds (property)") {
  const DiscreteMeasure m = make_lattice_ball(1, 1.0, 1);
  const int k = 10000;
  int bad_seeds = 0;
  for (int seed = 0; seed < 100; ++seed) {
    RngStream rng(static_cast<std::uint64_t>(seed) + 1000);
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(m.size());
    MeasureSampler sampler(m);
    for (int i = 0; i < k; ++i) ++counts[sampler.sample_index(rng)];
    bool ok = true;
    for (int a = 0; a < m.size(); ++a) {
      const double w = m.weights()(a);
      const double tol = 4.0 * std::sqrt(w * (1.0 - w) / k);
      if (std::abs(counts[a] / static_cast<double>(k) - w) > tol) ok = false;
    }
    if (!ok) ++bad_seeds;
  }
  CHECK(bad_seeds <= 1);  // 99% of seeds within the 4-sigma band
}

TEST_CASE("Density1d gauss family") {
  const Density1d f = Density1d::parse("gauss");
  CHECK(f.variance() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(f.mean() == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(f.inverse_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-6));
  // quantile check against the normal 84th percentile
  CHECK(f.inverse_cdf(0.8413447460685429) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("Density1d rejects potentials that violate the declared modulus") {
  CHECK_THROWS_AS(Density1d("bad", [](double u) { return 0.25 * u * u; }, 1.0, -5.0, 5.0),
                  std::invalid_argument);
}

TEST_CASE("Density1d parse errors") {
  CHECK_THROWS_AS(Density1d::parse("nosuchfamily"), std::invalid_argument);
  CHECK_THROWS_AS(Density1d::parse("gauss(-1)"), std::invalid_argument);
}

TEST_CASE("gauss_logcosh is recentred and 1-uniformly log-concave") {
  const Density1d f = Density1d::parse("gauss_logcosh(1,1)");
  CHECK(f.modulus() == doctest::Approx(1.0));
  CHECK(f.mean() == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(f.variance() < 1.0);  // curvature >= 1 forces variance <= 1
  CHECK(f.variance() > 0.3);
}

TEST_CASE("particle cloud of standard gaussian: moments within CI") {
  const Density1d f = Density1d::parse("gauss");
  RngStream rng(77);
  const int n = 100000;
  const DiscreteMeasure cloud = particle_cloud_product(f, 1, n, rng);
  CHECK(cloud.is_particle_cloud());
  const MeasureMoments mm = moments(cloud);
  CHECK(std::abs(mm.mean(0)) <= 3.0 * std::sqrt(1.0 / n));
  CHECK(mm.cov.mat()(0, 0) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("particle cloud respects restricted support") {
  const Density1d f("halfgauss", [](double u) { return 0.5 * u * u; }, 1.0, -0.5, 0.5);
  RngStream rng(78);
  const DiscreteMeasure cloud = particle_cloud_product(f, 1, 500, rng);
  CHECK(cloud.atoms().minCoeff() >= -0.5 - 1e-12);
  CHECK(cloud.atoms().maxCoeff() <= 0.5 + 1e-12);
}

TEST_CASE("particle cloud determinism") {
  const Density1d f = Density1d::parse("gauss");
  RngStream r1(123), r2(123);
  const DiscreteMeasure a = particle_cloud_product(f, 2, 64, r1);
  const DiscreteMeasure b = particle_cloud_product(f, 2, 64, r2);
  CHECK((a.atoms() - b.atoms()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("measure JSON round trip") {
  const DiscreteMeasure m = make_lattice_ball(2, 0.5, 1);
  const DiscreteMeasure back = DiscreteMeasure::from_json(m.to_json());
  CHECK(back.dim() == m.dim());
  CHECK(back.size() == m.size());
  CHECK((back.atoms() - m.atoms()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.weights() - m.weights()).cwiseAbs().maxCoeff() <= 1e-15);
}
