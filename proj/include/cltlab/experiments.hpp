#pragma once
// Experiment harness: named experiments producing machine-readable reports
// whose rows encode the checks as lhs <= rhs + tolerance + ci.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace cltlab {

struct ExperimentContext {
  nlohmann::json config;  // nested; overrides built-in defaults
  std::uint64_t seed = 20240601;
  std::string out_dir;  // empty: no files written
  int threads = 1;
  bool quick = false;
};

struct CriterionRow {
  std::string id;
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  double ci = 0.0;
  bool pass = false;
  std::string note;
};

struct Report {
  std::string experiment;
  std::vector<CriterionRow> rows;
  nlohmann::json provenance;
  std::vector<std::string> csv_files;

  bool all_pass() const;
  nlohmann::json to_json() const;
  std::string summary() const;  // one line per row + verdict
};

struct ExperimentInfo {
  std::string name;
  std::string binding;  // one-line description of what the experiment checks
};

const std::vector<ExperimentInfo>& experiment_catalog();

Report run_experiment(const std::string& name, const ExperimentContext& ctx);

// Dotted-key text config ("a.b = 1", arrays as [1,2]) or plain JSON.
nlohmann::json load_config_file(const std::string& path);

std::string config_hash(const nlohmann::json& config);

// Writes report.json and summary.txt into ctx.out_dir (no-op when empty).
void write_report(const Report& report, const std::string& out_dir);

}  // namespace cltlab
