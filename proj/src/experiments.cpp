#include "cltlab/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cltlab/rng.hpp"
#include "experiments_detail.hpp"

namespace cltlab {

namespace detail {

namespace {

const nlohmann::json* lookup(const nlohmann::json& cfg, const std::string& dotted) {
  std::string ptr = "/";
  for (char c : dotted) ptr += (c == '.') ? '/' : c;
  const auto jp = nlohmann::json::json_pointer(ptr);
  if (cfg.contains(jp)) return &cfg.at(jp);
  return nullptr;
}

}  // namespace

double get_num(const ExperimentContext& ctx, const std::string& dotted, double full_def,
               double quick_def) {
  if (const auto* j = lookup(ctx.config, dotted)) return j->get<double>();
  return ctx.quick ? quick_def : full_def;
}

long get_int(const ExperimentContext& ctx, const std::string& dotted, long full_def,
             long quick_def) {
  if (const auto* j = lookup(ctx.config, dotted)) return j->get<long>();
  return ctx.quick ? quick_def : full_def;
}

std::vector<long> get_int_list(const ExperimentContext& ctx, const std::string& dotted,
                               std::vector<long> def) {
  if (const auto* j = lookup(ctx.config, dotted)) return j->get<std::vector<long>>();
  return def;
}

std::string csv_path(const ExperimentContext& ctx, const std::string& name) {
  if (ctx.out_dir.empty()) return {};
  std::filesystem::create_directories(ctx.out_dir);
  return ctx.out_dir + "/" + name;
}

CriterionRow ineq_row(std::string id, double lhs, double rhs, double tol, double ci,
                      std::string note) {
  CriterionRow r;
  r.id = std::move(id);
  r.lhs = lhs;
  r.rhs = rhs;
  r.tolerance = tol;
  r.ci = ci;
  r.pass = lhs <= rhs + tol + ci;
  r.note = std::move(note);
  return r;
}

CriterionRow window_row(std::string id, double value, double center, double halfwidth,
                        std::string note) {
  CriterionRow r;
  r.id = std::move(id);
  r.lhs = std::abs(value - center);
  r.rhs = halfwidth;
  r.pass = r.lhs <= r.rhs;
  r.note = std::move(note) + " value=" + std::to_string(value);
  return r;
}

}  // namespace detail

bool Report::all_pass() const {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return true;
}

nlohmann::json Report::to_json() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["provenance"] = provenance;
  auto rows_j = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json rj;
    rj["id"] = r.id;
    rj["lhs"] = r.lhs;
    rj["rhs"] = r.rhs;
    rj["tolerance"] = r.tolerance;
    rj["ci"] = r.ci;
    rj["pass"] = r.pass;
    if (!r.note.empty()) rj["note"] = r.note;
    rows_j.push_back(rj);
  }
  j["criteria"] = rows_j;
  j["csv_files"] = csv_files;
  j["all_pass"] = all_pass();
  return j;
}

std::string Report::summary() const {
  std::ostringstream os;
  for (const auto& r : rows) {
    os << (r.pass ? "[PASS] " : "[FAIL] ") << experiment << "/" << r.id
       << "  lhs=" << r.lhs << " rhs=" << r.rhs << " tol=" << r.tolerance
       << " ci=" << r.ci;
    if (!r.note.empty()) os << "  (" << r.note << ")";
    os << "\n";
  }
  os << (all_pass() ? "ALL PASS" : "FAILURES PRESENT") << " [" << experiment << "]\n";
  return os.str();
}

const std::vector<ExperimentInfo>& experiment_catalog() {
  static const std::vector<ExperimentInfo> catalog = {
      {"w2-bounded",
       "W2(S_n, G) of bounded lattice measures against beta sqrt(d) sqrt(32+2 log2 n)/sqrt(n)"},
      {"w2-logconcave-rate",
       "log-log rate of empirical W2 in n for a lattice measure and a capped-policy cloud"},
      {"tau-mean", "mean collapse time against beta^2 (equality for two-point measures)"},
      {"tau-tails", "dyadic tail table of tau dominated by 2^{-i}"},
      {"main-inequality",
       "coupling cost E|s_n - g|^2 against the moment-grid quadrature bound"},
      {"embed-correctness", "chi-square fit of embedded points against the input measure"},
      {"identities",
       "structural checks: rank monotonicity, idempotency, capped norm, tilt/step and "
       "covariance-evolution consistency, trace inequality, moment identities"},
      {"entropy-strong", "FFT-oracle Ent(S_n||G) against 2(d+2Ent(X||gamma))/(sigma^4 n)"},
      {"entropy-rate", "log-log rate of Ent(S_n||G) in n for the skewed log-concave family"},
      {"estimator-calibration",
       "assignment solver vs brute force, Gaussian closed form vs sampling, variational "
       "entropy vs closed form and FFT oracle"},
  };
  return catalog;
}

Report run_experiment(const std::string& name, const ExperimentContext& ctx) {
  Report rep;
  if (name == "w2-bounded") rep = detail::exp_w2_bounded(ctx);
  else if (name == "w2-logconcave-rate") rep = detail::exp_w2_rate(ctx);
  else if (name == "tau-mean") rep = detail::exp_tau_mean(ctx);
  else if (name == "tau-tails") rep = detail::exp_tau_tails(ctx);
  else if (name == "main-inequality") rep = detail::exp_main_inequality(ctx);
  else if (name == "embed-correctness") rep = detail::exp_embed_correctness(ctx);
  else if (name == "identities") rep = detail::exp_identities(ctx);
  else if (name == "entropy-strong") rep = detail::exp_entropy_strong(ctx);
  else if (name == "entropy-rate") rep = detail::exp_entropy_rate(ctx);
  else if (name == "estimator-calibration") rep = detail::exp_estimator_calibration(ctx);
  else throw std::invalid_argument("run_experiment: unknown experiment '" + name + "'");

  rep.experiment = name;
  rep.provenance["seed"] = ctx.seed;
  rep.provenance["config_hash"] = config_hash(ctx.config);
  rep.provenance["quick"] = ctx.quick;
  rep.provenance["threads"] = ctx.threads;
  rep.provenance["version"] = "cltlab 0.1.0";
  return rep;
}

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config_file: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();

  // Try JSON first, fall back to dotted key/value lines.
  {
    const auto j = nlohmann::json::parse(text, nullptr, false);
    if (!j.is_discarded() && j.is_object()) return j;
  }

  nlohmann::json cfg = nlohmann::json::object();
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    const auto b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
  };
  while (std::getline(lines, line)) {
    ++lineno;
    const std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": missing '='");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string val = trim(stripped.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
    std::string ptr = "/";
    for (char c : key) ptr += (c == '.') ? '/' : c;
    auto parsed = nlohmann::json::parse(val, nullptr, false);
    if (parsed.is_discarded()) parsed = val;  // bare word -> string
    cfg[nlohmann::json::json_pointer(ptr)] = parsed;
  }
  return cfg;
}

std::string config_hash(const nlohmann::json& config) {
  // FNV-1a over the canonical dump.
  const std::string s = config.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_report(const Report& report, const std::string& out_dir) {
  if (out_dir.empty()) return;
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir + "/report.json");
    out << report.to_json().dump(2) << "\n";
  }
  {
    std::ofstream out(out_dir + "/summary.txt");
    out << report.summary();
  }
}

}  // namespace cltlab
