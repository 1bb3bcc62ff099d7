// Serial-vs-OpenMP timing for the two dominant Monte Carlo kernels: moment
// grids and coupled-pair bundles. The block decomposition is identical in
// both modes, so the outputs agree bit for bit; this target reports the
// speedup.

#include <chrono>
#include <cstdio>

#include "cltlab/embedding.hpp"
#include "cltlab/localization.hpp"
#include "cltlab/parallel.hpp"

using namespace cltlab;

namespace {

template <class F>
double time_ms(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

}  // namespace

int main() {
  const int hw = hardware_threads();
  std::printf("hardware threads: %d\n", hw);

  const DiscreteMeasure m = make_lattice_ball(2, 1.0, 2);
  EngineConfig cfg;
  cfg.dt_scale = 4e-3;
  cfg.t_end_factor = 16.0;
  const TimeGrid grid = make_step_grid(Policy::projection(), cfg, measure_radius(m));

  MomentGrid mg_serial, mg_par;
  const double t_serial = time_ms([&] {
    mg_serial = gamma_moments(m, Policy::projection(), cfg, grid, 2000, 42, 1);
  });
  const double t_par = time_ms([&] {
    mg_par = gamma_moments(m, Policy::projection(), cfg, grid, 2000, 42, hw);
  });
  double max_diff = 0.0;
  for (std::size_t j = 0; j < mg_serial.times.size(); ++j)
    max_diff = std::max(max_diff,
                        (mg_serial.e_gamma2[j] - mg_par.e_gamma2[j]).cwiseAbs().maxCoeff());
  std::printf("gamma_moments   serial %8.1f ms   omp(%d) %8.1f ms   speedup %.2fx   max|diff| %.3g\n",
              t_serial, hw, t_par, t_serial / t_par, max_diff);

  std::vector<CoupledPair> pairs_serial, pairs_par;
  const double c_serial = time_ms([&] {
    pairs_serial = sample_coupled_pairs(m, Policy::projection(), 16, mg_serial, cfg, 43, 200, 1);
  });
  const double c_par = time_ms([&] {
    pairs_par = sample_coupled_pairs(m, Policy::projection(), 16, mg_serial, cfg, 43, 200, hw);
  });
  double pair_diff = 0.0;
  for (std::size_t i = 0; i < pairs_serial.size(); ++i)
    pair_diff = std::max(pair_diff,
                         (pairs_serial[i].s_n - pairs_par[i].s_n).cwiseAbs().maxCoeff());
  std::printf("coupled_pairs   serial %8.1f ms   omp(%d) %8.1f ms   speedup %.2fx   max|diff| %.3g\n",
              c_serial, hw, c_par, c_serial / c_par, pair_diff);
  return 0;
}
