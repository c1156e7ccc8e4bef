#pragma once

#include <map>

#include <json.hpp>

#include "countspec/search.hpp"

namespace countspec {

/// Raised for malformed configuration. Maps to CLI exit code 1.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VariableDecision {
  std::optional<std::vector<int>> levels;
  std::optional<std::vector<Transform>> transformations;
  std::optional<std::vector<Dist>> distributions;
};

/// Resolved run configuration. Key names follow the argument tables of the
/// config schema verbatim (_hms, _par, test_percentage, Manual_Fit, ...);
/// unknown keys are rejected by name and defaults match the documented
/// values.
struct RunConfig {
  std::string data_path;
  ModelTerms terms;

  std::string obj1 = "BIC";
  std::optional<std::string> obj2 = "MSPE";

  double test_percentage = 0.3;
  std::vector<int> complexity_levels = {0, 1, 2, 3, 4, 5};
  std::vector<Family> model_types = {Family::Poisson, Family::NegBin};
  std::vector<Dist> distributions = {Dist::Triangular, Dist::Uniform, Dist::Normal,
                                     Dist::LogNormal, Dist::TruncNormal};
  std::vector<Transform> transformations = {Transform::No, Transform::Sqrt,
                                            Transform::Log, Transform::Arcsinh};

  std::string algorithm = "hs";
  /// False when the config never selected an algorithm; with a Manual_Fit
  /// block present that means "estimate the single model".
  bool algorithm_given = false;
  Hyperparameters hp;
  std::string method_ll = "L-BFGS-B";
  int max_characteristics = 25;
  int verbose = 1;
  std::uint64_t seed = 1;

  int draws = 200;
  DrawGenerator generator = DrawGenerator::Halton;
  double tn_bound = 1.96;

  std::optional<ManualSpec> manual_fit;
  bool manual_fit_deprecated_spelling = false;  // 'Manuel_Fit' was used
  std::map<std::string, VariableDecision> variable_decisions;

  std::optional<std::string> out_dir;

  std::vector<std::string> objective_names() const {
    std::vector<std::string> out{obj1};
    if (obj2) out.push_back(*obj2);
    return out;
  }
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// Fully resolved echo; parsing it reproduces the identical configuration.
nlohmann::json echo_config(const RunConfig& cfg);

/// Expand a complexity level: an integer c gives {0..c}, the marker 6 gives
/// all of {0..5}, a list is taken literally (6 inside a list expands too).
std::vector<int> expand_levels(const nlohmann::json& v);

/// Per-factor constraints against a loaded dataset: explicit
/// variable_decisions where given, otherwise full freedom within the
/// complexity level, always intersected with the per-column transformation
/// feasibility mask.
ConstraintSet build_constraints(const RunConfig& cfg, const Dataset& ds);

ManualSpec parse_manual_block(const nlohmann::json& j);

}  // namespace countspec
