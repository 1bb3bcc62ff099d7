// Entropy experiments: the strong log-concavity bound over the product
// families and the convergence-rate study for the skewed family.

#include <cmath>
#include <memory>
#include <string>

#include "cltlab/csv.hpp"
#include "cltlab/entropy.hpp"
#include "cltlab/stats.hpp"
#include "experiments_detail.hpp"

namespace cltlab::detail {

Report exp_entropy_strong(const ExperimentContext& ctx) {
  Report rep;
  const auto ns = get_int_list(ctx, "entropy.ns", {2, 4, 8, 16, 32, 64});
  const auto dims = get_int_list(ctx, "entropy.dims", {1, 2});
  const int grid = static_cast<int>(get_int(ctx, "entropy.grid", 1 << 15, 1 << 14));

  std::unique_ptr<CsvWriter> csv;
  const std::string path = csv_path(ctx, "entropy_strong.csv");
  if (!path.empty()) {
    csv = std::make_unique<CsvWriter>(
        path, std::vector<std::string>{"family", "d", "n", "oracle", "oracle_err", "bound",
                                       "ent_x_std", "reference"});
    rep.csv_files.push_back(path);
  }

  for (const std::string family : {"gauss", "gauss_logcosh(1,1)"}) {
    const Density1d f = Density1d::parse(family);
    if (f.modulus() < 1.0)
      throw std::invalid_argument("entropy-strong: family must be 1-uniformly log-concave");
    const double var = f.variance();
    const EntropyEstimate ent1_std = entropy_oracle_product_fft(f, 1, 1.0, grid);

    for (long d : dims) {
      double max_gauss = 0.0;
      for (long n : ns) {
        const EntropyEstimate o = entropy_oracle_product_fft(f, n, var, grid);
        const double lhs = static_cast<double>(d) * o.value;
        const double ent_x = static_cast<double>(d) * ent1_std.value;
        const double bound = strong_logconcave_bound(static_cast<int>(d), var, ent_x, n);
        const std::string id =
            family + "/d" + std::to_string(d) + "/n" + std::to_string(n);
        rep.rows.push_back(ineq_row(id, lhs, bound, 0.0, static_cast<double>(d) * o.ci,
                                    "sigma=" + fmt17(var)));
        if (family == "gauss") max_gauss = std::max(max_gauss, lhs);
        if (csv)
          csv->row({family, std::to_string(d), std::to_string(n), fmt17(o.value), fmt17(o.ci),
                    fmt17(bound), fmt17(ent1_std.value), o.reference});
      }
      if (family == "gauss")
        rep.rows.push_back(ineq_row("gauss-exact-zero/d" + std::to_string(d), max_gauss, 1e-6,
                                    0.0, 0.0, "Gaussian sums stay Gaussian"));
    }
  }
  return rep;
}

Report exp_entropy_rate(const ExperimentContext& ctx) {
  Report rep;
  const auto ns = get_int_list(ctx, "entropy.rate_ns", {2, 4, 8, 16, 32, 64});
  const int grid = static_cast<int>(get_int(ctx, "entropy.grid", 1 << 15, 1 << 14));
  const Density1d f = Density1d::parse("gauss_logcosh(1,1)");
  const double var = f.variance();

  std::unique_ptr<CsvWriter> csv;
  const std::string path = csv_path(ctx, "entropy_rate.csv");
  if (!path.empty()) {
    csv = std::make_unique<CsvWriter>(
        path, std::vector<std::string>{"n", "oracle", "oracle_err", "n_times_value"});
    rep.csv_files.push_back(path);
  }

  std::vector<double> ln_n, ln_v;
  double implied_constant = 0.0;
  for (long n : ns) {
    const EntropyEstimate o = entropy_oracle_product_fft(f, n, var, grid);
    ln_n.push_back(std::log(static_cast<double>(n)));
    ln_v.push_back(std::log(std::max(o.value, 1e-300)));
    implied_constant = std::max(implied_constant, o.value * static_cast<double>(n));
    if (csv)
      csv->row({std::to_string(n), fmt17(o.value), fmt17(o.ci),
                fmt17(o.value * static_cast<double>(n))});
  }
  const double slope = ls_slope(ln_n, ln_v);
  rep.rows.push_back(window_row("rate-slope", slope, -1.0, 0.2,
                                "implied constant sup n*Ent = " + fmt17(implied_constant)));
  return rep;
}

}  // namespace cltlab::detail
