#pragma once
// Shared helpers for the experiment implementations.

#include <string>
#include <vector>

#include "cltlab/experiments.hpp"

namespace cltlab::detail {

// Config lookup with separate full/quick defaults; dotted keys index the
// nested config document.
double get_num(const ExperimentContext& ctx, const std::string& dotted, double full_def,
               double quick_def);
long get_int(const ExperimentContext& ctx, const std::string& dotted, long full_def,
             long quick_def);
std::vector<long> get_int_list(const ExperimentContext& ctx, const std::string& dotted,
                               std::vector<long> def);

// Empty string when ctx.out_dir is empty (no CSV written).
std::string csv_path(const ExperimentContext& ctx, const std::string& name);

CriterionRow ineq_row(std::string id, double lhs, double rhs, double tol, double ci,
                      std::string note);
// |value - center| <= halfwidth
CriterionRow window_row(std::string id, double value, double center, double halfwidth,
                        std::string note);

Report exp_w2_bounded(const ExperimentContext& ctx);
Report exp_w2_rate(const ExperimentContext& ctx);
Report exp_tau_mean(const ExperimentContext& ctx);
Report exp_tau_tails(const ExperimentContext& ctx);
Report exp_main_inequality(const ExperimentContext& ctx);
Report exp_embed_correctness(const ExperimentContext& ctx);
Report exp_identities(const ExperimentContext& ctx);
Report exp_entropy_strong(const ExperimentContext& ctx);
Report exp_entropy_rate(const ExperimentContext& ctx);
Report exp_estimator_calibration(const ExperimentContext& ctx);

}  // namespace cltlab::detail
