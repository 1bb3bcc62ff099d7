#pragma once
// Seeded, stream-indexed RNG. Every Monte Carlo item (trajectory, pair,
// bootstrap replica) draws from a stream derived from (master seed, index),
// so results do not depend on thread count or execution order.

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace cltlab {

// splitmix64; used only to spread seed bits.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix64(master ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  static RngStream derive(std::uint64_t master, std::uint64_t stream) {
    return RngStream(derive_seed(master, stream));
  }

  double uniform() { return unif_(engine_); }
  double normal() { return norm_(engine_); }

  Eigen::VectorXd normal_vector(int d) {
    Eigen::VectorXd z(d);
    for (int i = 0; i < d; ++i) z[i] = norm_(engine_);
    return z;
  }

  std::uint64_t raw() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace cltlab
