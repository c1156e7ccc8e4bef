#pragma once

#include <iosfwd>

#include "countspec/config.hpp"
#include "countspec/report.hpp"

namespace countspec {

/// Exit codes: 0 ok, 1 configuration error, 2 data error.
enum ExitCode { kOk = 0, kConfigError = 1, kDataError = 2 };

struct RunOutcome {
  int exit_code = kOk;
  std::string run_dir;
  SearchResult search;
  std::vector<std::string> objective_names;
  double elapsed_seconds = 0.0;
};

/// Everything a run needs after the data step: role-assigned dataset,
/// train/test split, decision space and evaluator.
struct Prepared {
  Dataset data;
  Dataset train;
  Dataset test;
  SplitIndices split;
  SplitPlan plan;
  DecisionSpace space;
  std::optional<ModelSpecification> manual;
};

Prepared prepare(const RunConfig& cfg);

FitSettings fit_settings(const RunConfig& cfg);

/// Full search run: creates the run folder (config echo, split indices,
/// iteration log, archive CSV, per-member coefficient tables, Pareto plot
/// data), obeying `verbose` on the console. With a Manual_Fit block and no
/// algorithm selected this estimates the single specified model instead.
RunOutcome run(const RunConfig& cfg, std::ostream& console);

/// Manual single-model estimation (requires Manual_Fit).
RunOutcome fit_single(const RunConfig& cfg, std::ostream& console);

/// Cartesian hyperparameter sweep: every grid combination times n_seeds
/// seeded runs, one CSV row each (hyperparameters, seed, best normalized
/// weighted sum, archive size, elapsed seconds).
int sweep(const RunConfig& cfg, const nlohmann::json& grid, int n_seeds,
          const std::string& out_csv, std::ostream& console);

}  // namespace countspec
