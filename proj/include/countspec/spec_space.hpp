#pragma once

#include <optional>
#include <string>
#include <vector>

#include "countspec/dataset.hpp"

namespace countspec {

/// Per-factor hierarchy decision. Levels 2-5 carry a distribution; levels
/// 0-1 ignore it. Grouped (4) is admissible only when the dataset has a
/// group column.
enum class FactorLevel {
  Off = 0,
  Fixed = 1,
  Random = 2,
  Correlated = 3,
  Grouped = 4,
  HeteroMean = 5,
};

enum class Dist { Triangular, Uniform, Normal, LogNormal, TruncNormal };

enum class Family { Poisson = 0, NegBin = 1 };

std::string dist_code(Dist d);        // t, u, n, ln_n, tn_n
std::string dist_display(Dist d);     // triangular, uniform, normal, ...
Dist dist_from_string(const std::string& s);

struct FactorDecision {
  FactorLevel level = FactorLevel::Off;
  Transform transform = Transform::No;
  Dist dist = Dist::Normal;

  bool active() const { return level != FactorLevel::Off; }
  bool random() const { return static_cast<int>(level) >= 2; }
  bool operator==(const FactorDecision&) const = default;
};

/// One heterogeneity-in-means group: the random members each get their own
/// mean and spread, the mean covariates contribute shared shift terms with
/// one coefficient per covariate. All members share the distribution.
struct HeteroGroup {
  Dist dist = Dist::Normal;
  std::vector<int> random_members;   // factor indices
  std::vector<int> mean_covariates;  // factor indices
  bool operator==(const HeteroGroup&) const = default;
};

struct ModelSpecification {
  std::vector<FactorDecision> factors;
  Family family = Family::Poisson;
  std::vector<HeteroGroup> hetero_groups;

  bool operator==(const ModelSpecification&) const = default;

  std::vector<int> correlated_block() const;  // level-3 factor indices
  int active_count() const;

  /// Canonical string form, used for iteration logs, the archive CSV and
  /// the evaluation cache key. Hetero roles are part of the encoding.
  std::string encode(const std::vector<std::string>& factor_names) const;
};

struct FactorConstraint {
  std::vector<int> levels;              // ascending, subset of {0..5}
  std::vector<Transform> transforms;    // non-empty
  std::vector<Dist> dists;              // may be empty iff no level >= 2
};

struct ConstraintSet {
  std::vector<std::string> factor_names;
  std::vector<FactorConstraint> factors;
  std::vector<Family> families;         // non-empty subset of {Poisson, NegBin}
  int max_characteristics = 25;
  bool has_group = false;               // dataset admissibility for level 4
};

struct Violation {
  std::string factor;  // empty for global rules
  std::string rule;
};

/// Discrete decision space: one slot per factor level / transformation /
/// distribution plus one for the model family, each with an ordered list of
/// admissible values. All three metaheuristics move through this indexing.
class DecisionSpace {
 public:
  explicit DecisionSpace(ConstraintSet cs);

  const ConstraintSet& constraints() const { return cs_; }
  int n_factors() const { return static_cast<int>(cs_.factors.size()); }
  int n_slots() const { return 3 * n_factors() + 1; }
  int cardinality(int slot) const;

  std::vector<int> encode(const ModelSpecification& spec) const;
  ModelSpecification decode(const std::vector<int>& idx) const;

  /// Repair to a structurally valid specification: snap out-of-constraint
  /// values, degrade a lone correlated factor to a plain random parameter,
  /// form hetero groups per distribution code, and enforce the active-factor
  /// cap. Deterministic, idempotent, only ever lowers levels.
  ModelSpecification canonicalize(ModelSpecification spec) const;

  ModelSpecification random_specification(Rng& rng) const;
  ModelSpecification random_specification(std::uint64_t seed) const;

  /// Move exactly one slot to an adjacent admissible index (+-1 with
  /// wraparound); slots of cardinality 1 are never selected. Repair is
  /// applied to the result.
  ModelSpecification neighbor(const ModelSpecification& spec, Rng& rng) const;

  std::vector<Violation> validate(const ModelSpecification& spec) const;

 private:
  ConstraintSet cs_;
  std::vector<std::vector<int>> level_values_;
  std::vector<std::vector<Transform>> tf_values_;
  std::vector<std::vector<Dist>> dist_values_;  // single placeholder if empty constraint
  std::vector<Family> family_values_;

  int index_of_level(int factor, FactorLevel lv) const;
  bool level_allowed(int factor, int level) const;
  bool covariate_only(int factor) const;
  void downgrade(FactorDecision& d, int factor, int prefer) const;
  void derive_structure(ModelSpecification& spec) const;
};

/// Offspring index arithmetic used by differential evolution:
/// (base + ai * (donor1 - donor2)) mod cardinality, non-negative remainder.
int de_index_update(int base, int donor1, int donor2, int ai, int cardinality);

/// Parse a manual `Manual_Fit` block. `fixed_terms` names plain effects
/// ('const' is the always-present intercept), `rdm_terms` / `rdm_cor_terms` /
/// `grouped_terms` / `hetro_in_means` take "name:distribution" tokens, and
/// `transformations` aligns positionally with the concatenated term order.
/// In a hetero list the first token per distribution is the mean covariate,
/// the rest are random members.
struct ManualSpec {
  std::vector<std::string> fixed_terms;
  std::vector<std::string> rdm_terms;
  std::vector<std::string> rdm_cor_terms;
  std::vector<std::string> grouped_terms;
  std::vector<std::string> hetro_in_means;
  std::vector<std::string> transformations;
  int dispersion = 0;
};

ModelSpecification parse_manual_specification(
    const ManualSpec& manual, const std::vector<std::string>& factor_names);

}  // namespace countspec
