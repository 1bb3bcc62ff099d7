// Command-line harness: one subcommand per experiment, plus `list` and `all`.
// Writes report.json, CSV tables and a plain-text summary per experiment;
// exit code 0 iff every criterion passes.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cltlab/experiments.hpp"
#include "cltlab/parallel.hpp"

namespace {

struct Options {
  std::string config_path;
  std::uint64_t seed = 20240601;
  std::string out = "results";
  int threads = 0;  // 0: hardware default
  bool quick = false;
};

cltlab::ExperimentContext make_context(const Options& opt) {
  cltlab::ExperimentContext ctx;
  if (!opt.config_path.empty()) ctx.config = cltlab::load_config_file(opt.config_path);
  ctx.seed = opt.seed;
  ctx.threads = opt.threads > 0 ? opt.threads : cltlab::hardware_threads();
  ctx.quick = opt.quick;
  ctx.out_dir = opt.out;
  return ctx;
}

int run_one(const std::string& name, const Options& opt) {
  cltlab::ExperimentContext ctx = make_context(opt);
  if (!ctx.out_dir.empty()) ctx.out_dir += "/" + name;
  const cltlab::Report rep = cltlab::run_experiment(name, ctx);
  cltlab::write_report(rep, ctx.out_dir);
  std::cout << rep.summary();
  return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cltlab: localization-based embedding experiments and bound checks"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config_path, "config file (dotted key/value or JSON)");
  app.add_option("--seed", opt.seed, "master RNG seed");
  app.add_option("--out", opt.out, "output directory (empty to skip files)");
  app.add_option("--threads", opt.threads, "worker threads (default: hardware)");
  app.add_flag("--quick", opt.quick, "reduced counts for a fast pass");

  auto* list = app.add_subcommand("list", "print the experiment catalog");
  auto* all = app.add_subcommand("all", "run every experiment");
  for (const auto& info : cltlab::experiment_catalog())
    app.add_subcommand(info.name, info.binding);

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& info : cltlab::experiment_catalog())
        std::cout << info.name << "  --  " << info.binding << "\n";
      return 0;
    }
    if (all->parsed()) {
      int status = 0;
      for (const auto& info : cltlab::experiment_catalog())
        status |= run_one(info.name, opt);
      std::cout << (status == 0 ? "ALL EXPERIMENTS PASS\n" : "EXPERIMENT FAILURES PRESENT\n");
      return status;
    }
    for (const auto& info : cltlab::experiment_catalog())
      if (app.get_subcommand(info.name)->parsed()) return run_one(info.name, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
