#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "cltlab/experiments.hpp"

using namespace cltlab;

namespace {

std::string write_temp(const std::string& text) {
  const std::string path = "/tmp/cltlab_cfg_test.txt";
  std::ofstream out(path);
  out << text;
  return path;
}

}  // namespace

TEST_CASE("dotted key/value config parsing with nesting") {
  const std::string path = write_temp(
      "# comment\n"
      "seed = 42\n"
      "tau.n_traj = 5000\n"
      "w2_bounded.ns = [4, 16]\n"
      "main.dt_scale = 0.002\n"
      "name = lattice\n");
  const nlohmann::json cfg = load_config_file(path);
  CHECK(cfg["seed"] == 42);
  CHECK(cfg["tau"]["n_traj"] == 5000);
  CHECK(cfg["w2_bounded"]["ns"][1] == 16);
  CHECK(cfg["main"]["dt_scale"] == doctest::Approx(0.002));
  CHECK(cfg["name"] == "lattice");
}

TEST_CASE("JSON config accepted directly") {
  const std::string path = write_temp(R"({"tau": {"n_traj": 123}})");
  const nlohmann::json cfg = load_config_file(path);
  CHECK(cfg["tau"]["n_traj"] == 123);
}

TEST_CASE("malformed config lines are rejected") {
  const std::string path = write_temp("this line has no equals\n");
  CHECK_THROWS(load_config_file(path));
}

TEST_CASE("config hash is stable and sensitive") {
  nlohmann::json a = {{"x", 1}};
  nlohmann::json b = {{"x", 2}};
  CHECK(config_hash(a) == config_hash(a));
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("experiment catalog names are stable and at least nine strong") {
  const auto& cat = experiment_catalog();
  CHECK(cat.size() >= 9);
  auto has = [&](const std::string& name) {
    for (const auto& info : cat)
      if (info.name == name) return true;
    return false;
  };
  CHECK(has("w2-bounded"));
  CHECK(has("entropy-strong"));
  CHECK(has("embed-correctness"));
  CHECK(has("identities"));
  CHECK(has("estimator-calibration"));
}

TEST_CASE("unknown experiment name is rejected") {
  ExperimentContext ctx;
  CHECK_THROWS_AS(run_experiment("nope", ctx), std::invalid_argument);
}

TEST_CASE("reports are deterministic under a fixed seed") {
  ExperimentContext ctx;
  ctx.seed = 4242;
  ctx.quick = true;
  ctx.threads = 2;
  ctx.config["tau"]["n_traj"] = 2000;
  const Report a = run_experiment("tau-mean", ctx);
  const Report b = run_experiment("tau-mean", ctx);
  CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("report rows encode the inequality pass rule") {
  ExperimentContext ctx;
  ctx.quick = true;
  ctx.threads = 2;
  ctx.config["tau"]["n_traj"] = 2000;
  const Report rep = run_experiment("tau-mean", ctx);
  CHECK(!rep.rows.empty());
  for (const auto& row : rep.rows)
    CHECK(row.pass == (row.lhs <= row.rhs + row.tolerance + row.ci));
  const nlohmann::json j = rep.to_json();
  CHECK(j.contains("provenance"));
  CHECK(j["provenance"].contains("config_hash"));
  CHECK(j["provenance"].contains("seed"));
}
