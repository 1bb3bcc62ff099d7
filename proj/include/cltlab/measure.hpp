#pragma once
// Finitely supported measures: containers, generators, samplers and moment
// computations. Continuous one-dimensional laws enter as particle clouds
// drawn by inverse-CDF from a tabulated density.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "cltlab/psd.hpp"
#include "cltlab/rng.hpp"

namespace cltlab {

class DiscreteMeasure {
 public:
  // Atoms are columns of `atoms`; weights must be nonnegative and finite and
  // are normalized to sum to 1. Exactly coincident atoms are merged with
  // their weights added.
  DiscreteMeasure(Eigen::MatrixXd atoms, Eigen::VectorXd weights,
                  bool is_particle_cloud = false);

  int dim() const { return static_cast<int>(atoms_.rows()); }
  int size() const { return static_cast<int>(atoms_.cols()); }
  const Eigen::MatrixXd& atoms() const { return atoms_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::VectorXd atom(int i) const { return atoms_.col(i); }

  // True when the measure stands in for an absolutely continuous law.
  bool is_particle_cloud() const { return is_particle_cloud_; }

  static DiscreteMeasure point_mass(const Eigen::VectorXd& x);
  static DiscreteMeasure two_point(double beta);  // {-beta, +beta}, weights 1/2

  nlohmann::json to_json() const;
  static DiscreteMeasure from_json(const nlohmann::json& j);

 private:
  Eigen::MatrixXd atoms_;    // d x k
  Eigen::VectorXd weights_;  // k, on the simplex
  bool is_particle_cloud_ = false;
};

struct MeasureMoments {
  Eigen::VectorXd mean;
  SymMatrix cov;
  double radius = 0.0;  // max atom norm
};

MeasureMoments moments(const DiscreteMeasure& m);

// Uniform weights on the scaled integer points within `radius_in_steps`
// (Euclidean) of the origin, recentred to mean zero. Throws when the lattice
// enumeration exceeds max_atoms.
DiscreteMeasure make_lattice_ball(int dim, double spacing, int radius_in_steps,
                                  int max_atoms = 200000);

// Affine map x -> cov^{-1/2}(x - mean); requires min eigenvalue > 1e-10.
DiscreteMeasure isotropize(const DiscreteMeasure& m);

// Weighted atom sampling via cumulative table + binary search.
class MeasureSampler {
 public:
  explicit MeasureSampler(const DiscreteMeasure& m);
  int sample_index(RngStream& rng) const;
  Eigen::VectorXd sample(RngStream& rng) const;

 private:
  const DiscreteMeasure* m_;
  std::vector<double> cdf_;
};

std::vector<Eigen::VectorXd> sample(const DiscreteMeasure& m, RngStream& rng, int k);

// One-dimensional density exp(-phi(u)) on [lo, hi], normalized by quadrature
// on a 2^14-node grid. `modulus` declares a uniform lower bound on phi''
// (0 marks plain log-concavity); the declaration is checked on a 1e3-point
// grid at construction. Families are recentred to mean zero.
class Density1d {
 public:
  Density1d(std::string name, std::function<double(double)> potential, double modulus,
            double lo, double hi);

  // "gauss", "gauss(var)", "gauss_logcosh(a)", "gauss_logcosh(a,s)",
  // "uniform", "uniform(half_width)"
  static Density1d parse(const std::string& spec);

  const std::string& name() const { return name_; }
  double modulus() const { return modulus_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double mean() const { return mean_; }      // after recentring: 0
  double variance() const { return variance_; }
  double normalization() const { return normalization_; }

  double pdf(double u) const;        // normalized density
  double log_unnormalized(double u) const;
  double inverse_cdf(double p) const;

  int grid_size() const { return static_cast<int>(grid_x_.size()); }

 private:
  void build_tables();

  std::string name_;
  std::function<double(double)> potential_;
  double modulus_ = 0.0;
  double lo_ = 0.0, hi_ = 0.0;
  double shift_ = 0.0;  // recentring offset applied to the raw potential
  double mean_ = 0.0, variance_ = 0.0, normalization_ = 0.0;
  std::vector<double> grid_x_, grid_pdf_, grid_cdf_;
};

// N-atom cloud with uniform weights, coordinates iid by inverse-CDF along
// each of the d axes (product law).
DiscreteMeasure particle_cloud_product(const Density1d& f, int dim, int n_particles,
                                       RngStream& rng);

}  // namespace cltlab
