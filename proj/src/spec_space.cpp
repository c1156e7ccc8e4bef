#include "countspec/spec_space.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace countspec {

std::string dist_code(Dist d) {
  switch (d) {
    case Dist::Triangular: return "t";
    case Dist::Uniform: return "u";
    case Dist::Normal: return "n";
    case Dist::LogNormal: return "ln_n";
    case Dist::TruncNormal: return "tn_n";
  }
  return "?";
}

std::string dist_display(Dist d) {
  switch (d) {
    case Dist::Triangular: return "triangular";
    case Dist::Uniform: return "uniform";
    case Dist::Normal: return "normal";
    case Dist::LogNormal: return "ln_normal";
    case Dist::TruncNormal: return "tn_normal";
  }
  return "?";
}

Dist dist_from_string(const std::string& s) {
  // Short codes, long codes and spelled-out names are all accepted and
  // canonicalized.
  if (s == "t" || s == "triangular") return Dist::Triangular;
  if (s == "u" || s == "uniform") return Dist::Uniform;
  if (s == "n" || s == "normal") return Dist::Normal;
  if (s == "ln" || s == "ln_n" || s == "ln_normal" || s == "lognormal" ||
      s == "log-normal" || s == "log_normal")
    return Dist::LogNormal;
  if (s == "tn" || s == "tn_n" || s == "tn_normal" || s == "truncated_normal" ||
      s == "truncated-normal")
    return Dist::TruncNormal;
  throw std::invalid_argument("unknown distribution '" + s + "'");
}

std::vector<int> ModelSpecification::correlated_block() const {
  std::vector<int> out;
  for (std::size_t k = 0; k < factors.size(); ++k)
    if (factors[k].level == FactorLevel::Correlated) out.push_back(static_cast<int>(k));
  return out;
}

int ModelSpecification::active_count() const {
  int n = 0;
  for (const auto& f : factors)
    if (f.active()) ++n;
  return n;
}

std::string ModelSpecification::encode(const std::vector<std::string>& names) const {
  std::ostringstream os;
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (k) os << ';';
    const FactorDecision& d = factors[k];
    os << names[k] << '=' << static_cast<int>(d.level);
    if (d.active()) os << '/' << to_string(d.transform);
    if (d.random()) os << '/' << dist_code(d.dist);
    if (d.level == FactorLevel::HeteroMean) {
      bool is_cov = false;
      for (const auto& g : hetero_groups)
        for (int m : g.mean_covariates)
          if (m == static_cast<int>(k)) is_cov = true;
      os << (is_cov ? "/cov" : "/rm");
    }
  }
  os << "|m=" << static_cast<int>(family);
  return os.str();
}

DecisionSpace::DecisionSpace(ConstraintSet cs) : cs_(std::move(cs)) {
  const int K = n_factors();
  if (static_cast<int>(cs_.factor_names.size()) != K)
    throw std::invalid_argument("constraint set: factor name/constraint count mismatch");
  if (cs_.families.empty())
    throw std::invalid_argument("constraint set: no model type allowed");
  if (cs_.max_characteristics < 1)
    throw std::invalid_argument("constraint set: max_characteristics must be >= 1");

  level_values_.resize(static_cast<std::size_t>(K));
  tf_values_.resize(static_cast<std::size_t>(K));
  dist_values_.resize(static_cast<std::size_t>(K));
  family_values_ = cs_.families;

  int mandatory_active = 0;
  for (int k = 0; k < K; ++k) {
    const FactorConstraint& fc = cs_.factors[static_cast<std::size_t>(k)];
    const std::string& name = cs_.factor_names[static_cast<std::size_t>(k)];

    std::vector<int> levels;
    for (int lv : fc.levels) {
      if (lv < 0 || lv > 5)
        throw std::invalid_argument("factor '" + name + "': level " +
                                    std::to_string(lv) + " out of range");
      if (lv == 4 && !cs_.has_group) continue;  // needs a group column
      levels.push_back(lv);
    }
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    if (levels.empty())
      throw std::invalid_argument("factor '" + name + "': no admissible level");
    level_values_[static_cast<std::size_t>(k)] = levels;
    if (levels.front() > 0) ++mandatory_active;

    if (fc.transforms.empty())
      throw std::invalid_argument("factor '" + name + "': no admissible transformation");
    tf_values_[static_cast<std::size_t>(k)] = fc.transforms;

    bool bears_dist = std::any_of(levels.begin(), levels.end(), [](int lv) { return lv >= 2; });
    if (bears_dist && fc.dists.empty())
      throw std::invalid_argument("factor '" + name +
                                  "': random levels allowed but no distribution");
    dist_values_[static_cast<std::size_t>(k)] =
        fc.dists.empty() ? std::vector<Dist>{Dist::Normal} : fc.dists;
  }
  if (mandatory_active > cs_.max_characteristics)
    throw std::invalid_argument(
        "constraints force more active factors than _max_characteristics allows");
}

int DecisionSpace::cardinality(int slot) const {
  const int K = n_factors();
  if (slot < K) return static_cast<int>(level_values_[static_cast<std::size_t>(slot)].size());
  if (slot < 2 * K) return static_cast<int>(tf_values_[static_cast<std::size_t>(slot - K)].size());
  if (slot < 3 * K) return static_cast<int>(dist_values_[static_cast<std::size_t>(slot - 2 * K)].size());
  return static_cast<int>(family_values_.size());
}

int DecisionSpace::index_of_level(int factor, FactorLevel lv) const {
  const auto& vals = level_values_[static_cast<std::size_t>(factor)];
  for (std::size_t i = 0; i < vals.size(); ++i)
    if (vals[i] == static_cast<int>(lv)) return static_cast<int>(i);
  return -1;
}

bool DecisionSpace::level_allowed(int factor, int level) const {
  const auto& vals = level_values_[static_cast<std::size_t>(factor)];
  return std::find(vals.begin(), vals.end(), level) != vals.end();
}

bool DecisionSpace::covariate_only(int factor) const {
  // No distribution-bearing alternative besides membership in a hetero group.
  for (int lv : level_values_[static_cast<std::size_t>(factor)])
    if (lv == 2 || lv == 3 || lv == 4) return false;
  return true;
}

std::vector<int> DecisionSpace::encode(const ModelSpecification& spec) const {
  const int K = n_factors();
  if (static_cast<int>(spec.factors.size()) != K)
    throw std::invalid_argument("encode: wrong factor count");
  std::vector<int> idx(static_cast<std::size_t>(n_slots()), 0);
  for (int k = 0; k < K; ++k) {
    const FactorDecision& d = spec.factors[static_cast<std::size_t>(k)];
    int li = index_of_level(k, d.level);
    if (li < 0)
      throw std::invalid_argument("encode: level not admissible for factor " +
                                  cs_.factor_names[static_cast<std::size_t>(k)]);
    idx[static_cast<std::size_t>(k)] = li;

    const auto& tfs = tf_values_[static_cast<std::size_t>(k)];
    auto ti = std::find(tfs.begin(), tfs.end(), d.transform);
    idx[static_cast<std::size_t>(K + k)] =
        ti == tfs.end() ? 0 : static_cast<int>(ti - tfs.begin());

    const auto& dss = dist_values_[static_cast<std::size_t>(k)];
    auto di = std::find(dss.begin(), dss.end(), d.dist);
    idx[static_cast<std::size_t>(2 * K + k)] =
        di == dss.end() ? 0 : static_cast<int>(di - dss.begin());
  }
  auto fi = std::find(family_values_.begin(), family_values_.end(), spec.family);
  idx[static_cast<std::size_t>(3 * K)] =
      fi == family_values_.end() ? 0 : static_cast<int>(fi - family_values_.begin());
  return idx;
}

ModelSpecification DecisionSpace::decode(const std::vector<int>& idx) const {
  const int K = n_factors();
  if (static_cast<int>(idx.size()) != n_slots())
    throw std::invalid_argument("decode: wrong slot count");
  ModelSpecification spec;
  spec.factors.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    FactorDecision& d = spec.factors[static_cast<std::size_t>(k)];
    d.level = static_cast<FactorLevel>(
        level_values_[static_cast<std::size_t>(k)][static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])]);
    d.transform = tf_values_[static_cast<std::size_t>(k)]
                            [static_cast<std::size_t>(idx[static_cast<std::size_t>(K + k)])];
    d.dist = dist_values_[static_cast<std::size_t>(k)]
                         [static_cast<std::size_t>(idx[static_cast<std::size_t>(2 * K + k)])];
  }
  spec.family = family_values_[static_cast<std::size_t>(idx[static_cast<std::size_t>(3 * K)])];
  return canonicalize(std::move(spec));
}

void DecisionSpace::downgrade(FactorDecision& d, int factor, int prefer) const {
  const int cur = static_cast<int>(d.level);
  if (prefer < cur && level_allowed(factor, prefer)) {
    d.level = static_cast<FactorLevel>(prefer);
    return;
  }
  for (int lv = cur - 1; lv >= 0; --lv) {
    if (level_allowed(factor, lv)) {
      d.level = static_cast<FactorLevel>(lv);
      return;
    }
  }
  // Nothing lower is admissible; leave as-is, the structural pass deals with
  // partners instead.
}

void DecisionSpace::derive_structure(ModelSpecification& spec) const {
  spec.hetero_groups.clear();
  static const Dist order[] = {Dist::Triangular, Dist::Uniform, Dist::Normal,
                               Dist::LogNormal, Dist::TruncNormal};
  for (Dist d : order) {
    HeteroGroup g;
    g.dist = d;
    for (std::size_t k = 0; k < spec.factors.size(); ++k) {
      const FactorDecision& f = spec.factors[k];
      if (f.level != FactorLevel::HeteroMean || f.dist != d) continue;
      if (covariate_only(static_cast<int>(k)))
        g.mean_covariates.push_back(static_cast<int>(k));
      else
        g.random_members.push_back(static_cast<int>(k));
    }
    if (g.random_members.empty() && g.mean_covariates.empty()) continue;
    // A group needs at least one covariate; conscript the last random member
    // when the constraints designate none.
    if (g.mean_covariates.empty() && g.random_members.size() >= 2) {
      g.mean_covariates.push_back(g.random_members.back());
      g.random_members.pop_back();
    }
    spec.hetero_groups.push_back(std::move(g));
  }
}

ModelSpecification DecisionSpace::canonicalize(ModelSpecification spec) const {
  const int K = n_factors();
  if (static_cast<int>(spec.factors.size()) != K)
    throw std::invalid_argument("canonicalize: wrong factor count");

  // Snap out-of-constraint values.
  for (int k = 0; k < K; ++k) {
    FactorDecision& d = spec.factors[static_cast<std::size_t>(k)];
    if (!level_allowed(k, static_cast<int>(d.level))) {
      const auto& vals = level_values_[static_cast<std::size_t>(k)];
      int best = vals.front();
      for (int v : vals) {
        int cur = static_cast<int>(d.level);
        if (std::abs(v - cur) < std::abs(best - cur) ||
            (std::abs(v - cur) == std::abs(best - cur) && v < best))
          best = v;
      }
      d.level = static_cast<FactorLevel>(best);
    }
    const auto& tfs = tf_values_[static_cast<std::size_t>(k)];
    if (std::find(tfs.begin(), tfs.end(), d.transform) == tfs.end())
      d.transform = tfs.front();
    const auto& dss = dist_values_[static_cast<std::size_t>(k)];
    if (std::find(dss.begin(), dss.end(), d.dist) == dss.end()) d.dist = dss.front();
  }
  if (std::find(family_values_.begin(), family_values_.end(), spec.family) ==
      family_values_.end())
    spec.family = family_values_.front();

  // Structural repair to a fixpoint. Levels only move downward here (with
  // the single up-rank exception for a correlated partner), so this settles
  // quickly; the guard is belt-and-braces.
  for (int pass = 0; pass < 6 * K + 6; ++pass) {
    bool changed = false;

    std::vector<int> corr = spec.correlated_block();
    if (corr.size() == 1) {
      int k = corr.front();
      FactorDecision& d = spec.factors[static_cast<std::size_t>(k)];
      FactorLevel before = d.level;
      downgrade(d, k, 2);
      if (d.level != before) {
        changed = true;
      } else {
        // Factor is pinned at level 3; recruit the lowest-index partner.
        for (int j = 0; j < K && !changed; ++j) {
          if (j != k && level_allowed(j, 3)) {
            spec.factors[static_cast<std::size_t>(j)].level = FactorLevel::Correlated;
            changed = true;
          }
        }
        if (!changed)
          throw std::invalid_argument(
              "constraints leave a lone correlated factor with no repair");
      }
    }

    // Hetero groups that cannot satisfy their role invariant degrade.
    static const Dist order[] = {Dist::Triangular, Dist::Uniform, Dist::Normal,
                                 Dist::LogNormal, Dist::TruncNormal};
    for (Dist dd : order) {
      std::vector<int> members;
      int n_rm = 0;
      for (int k = 0; k < K; ++k) {
        const FactorDecision& f = spec.factors[static_cast<std::size_t>(k)];
        if (f.level == FactorLevel::HeteroMean && f.dist == dd) {
          members.push_back(k);
          if (!covariate_only(k)) ++n_rm;
        }
      }
      if (members.empty()) continue;
      bool degrade_all = members.size() == 1 || n_rm == 0;
      if (degrade_all) {
        for (int k : members) {
          FactorDecision& f = spec.factors[static_cast<std::size_t>(k)];
          FactorLevel before = f.level;
          downgrade(f, k, 2);
          if (f.level != before) changed = true;
        }
      }
    }

    // Active-factor cap: switch off from the highest index down.
    while (spec.active_count() > cs_.max_characteristics) {
      bool off = false;
      for (int k = K - 1; k >= 0; --k) {
        FactorDecision& f = spec.factors[static_cast<std::size_t>(k)];
        if (f.active() && level_allowed(k, 0)) {
          f.level = FactorLevel::Off;
          changed = true;
          off = true;
          break;
        }
      }
      if (!off) break;
    }

    if (!changed) break;
  }

  derive_structure(spec);
  return spec;
}

ModelSpecification DecisionSpace::random_specification(Rng& rng) const {
  std::vector<int> idx(static_cast<std::size_t>(n_slots()));
  for (int s = 0; s < n_slots(); ++s)
    idx[static_cast<std::size_t>(s)] = rng.uniform_int(cardinality(s));
  return decode(idx);
}

ModelSpecification DecisionSpace::random_specification(std::uint64_t seed) const {
  Rng rng(seed);
  return random_specification(rng);
}

ModelSpecification DecisionSpace::neighbor(const ModelSpecification& spec, Rng& rng) const {
  std::vector<int> idx = encode(spec);
  std::vector<int> slots;
  for (int s = 0; s < n_slots(); ++s)
    if (cardinality(s) >= 2) slots.push_back(s);
  if (slots.empty()) return spec;
  rng.shuffle(slots);
  int first_dir = rng.uniform01() < 0.5 ? -1 : 1;
  for (int s : slots) {
    for (int attempt = 0; attempt < 2; ++attempt) {
      int dir = attempt == 0 ? first_dir : -first_dir;
      std::vector<int> cand = idx;
      cand[static_cast<std::size_t>(s)] =
          euclid_mod(idx[static_cast<std::size_t>(s)] + dir, cardinality(s));
      ModelSpecification out = decode(cand);
      if (!(out == spec)) return out;
    }
  }
  return spec;
}

std::vector<Violation> DecisionSpace::validate(const ModelSpecification& spec) const {
  std::vector<Violation> out;
  const int K = n_factors();
  if (static_cast<int>(spec.factors.size()) != K) {
    out.push_back({"", "factor count mismatch"});
    return out;
  }
  for (int k = 0; k < K; ++k) {
    const FactorDecision& d = spec.factors[static_cast<std::size_t>(k)];
    const std::string& name = cs_.factor_names[static_cast<std::size_t>(k)];
    const FactorConstraint& fc = cs_.factors[static_cast<std::size_t>(k)];

    if (std::find(fc.levels.begin(), fc.levels.end(), static_cast<int>(d.level)) ==
        fc.levels.end())
      out.push_back({name, "level"});
    if (d.level == FactorLevel::Grouped && !cs_.has_group)
      out.push_back({name, "grouped random parameters need a group column"});
    if (d.active() &&
        std::find(fc.transforms.begin(), fc.transforms.end(), d.transform) ==
            fc.transforms.end())
      out.push_back({name, "transformation"});
    if (d.random() &&
        std::find(fc.dists.begin(), fc.dists.end(), d.dist) == fc.dists.end())
      out.push_back({name, "distribution"});
  }
  if (std::find(cs_.families.begin(), cs_.families.end(), spec.family) ==
      cs_.families.end())
    out.push_back({"", "model type"});
  if (spec.active_count() > cs_.max_characteristics)
    out.push_back({"", "max_characteristics"});

  if (spec.correlated_block().size() == 1)
    out.push_back({cs_.factor_names[static_cast<std::size_t>(spec.correlated_block()[0])],
                   "correlated block of size 1"});

  // Hetero structure: every level-5 factor in exactly one group, each group
  // with at least one random member and one mean covariate.
  std::vector<int> membership(static_cast<std::size_t>(K), 0);
  for (const auto& g : spec.hetero_groups) {
    if (g.random_members.empty() || g.mean_covariates.empty())
      out.push_back({"", "hetero group missing a random member or mean covariate"});
    for (int m : g.random_members) ++membership[static_cast<std::size_t>(m)];
    for (int m : g.mean_covariates) ++membership[static_cast<std::size_t>(m)];
  }
  for (int k = 0; k < K; ++k) {
    bool is5 = spec.factors[static_cast<std::size_t>(k)].level == FactorLevel::HeteroMean;
    if (is5 && membership[static_cast<std::size_t>(k)] != 1)
      out.push_back({cs_.factor_names[static_cast<std::size_t>(k)],
                     "hetero group membership"});
    if (!is5 && membership[static_cast<std::size_t>(k)] != 0)
      out.push_back({cs_.factor_names[static_cast<std::size_t>(k)],
                     "non-level-5 factor inside a hetero group"});
  }
  return out;
}

int de_index_update(int base, int donor1, int donor2, int ai, int cardinality) {
  if (cardinality < 1)
    throw std::invalid_argument("de_index_update: cardinality must be >= 1");
  long long v = static_cast<long long>(base) +
                static_cast<long long>(ai) * (static_cast<long long>(donor1) -
                                              static_cast<long long>(donor2));
  return euclid_mod(v, cardinality);
}

namespace {

std::pair<std::string, Dist> parse_term_token(const std::string& token) {
  auto pos = token.find(':');
  if (pos == std::string::npos)
    throw std::invalid_argument("term '" + token + "' needs a name:distribution form");
  return {token.substr(0, pos), dist_from_string(token.substr(pos + 1))};
}

int factor_index(const std::vector<std::string>& names, const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  throw std::invalid_argument("unknown factor '" + name + "'");
}

}  // namespace

ModelSpecification parse_manual_specification(
    const ManualSpec& manual, const std::vector<std::string>& factor_names) {
  ModelSpecification spec;
  spec.factors.resize(factor_names.size());

  if (manual.dispersion == 0)
    spec.family = Family::Poisson;
  else if (manual.dispersion == 1)
    spec.family = Family::NegBin;
  else
    throw std::invalid_argument("dispersion must be 0 (Poisson) or 1 (NegBin)");

  struct Term {
    int factor;  // -1 for the intercept
    std::string name;
  };
  std::vector<Term> order;
  std::set<std::string> seen;

  auto claim = [&](const std::string& name) {
    if (!seen.insert(name).second)
      throw std::invalid_argument("factor '" + name + "' listed more than once");
  };

  for (const std::string& name : manual.fixed_terms) {
    claim(name);
    if (name == "const") {
      order.push_back({-1, name});  // intercept is implicit and always fixed
      continue;
    }
    int k = factor_index(factor_names, name);
    spec.factors[static_cast<std::size_t>(k)].level = FactorLevel::Fixed;
    order.push_back({k, name});
  }

  auto add_random = [&](const std::vector<std::string>& tokens, FactorLevel level) {
    for (const std::string& tok : tokens) {
      auto [name, dist] = parse_term_token(tok);
      claim(name);
      int k = factor_index(factor_names, name);
      spec.factors[static_cast<std::size_t>(k)].level = level;
      spec.factors[static_cast<std::size_t>(k)].dist = dist;
      order.push_back({k, name});
    }
  };
  add_random(manual.rdm_terms, FactorLevel::Random);
  add_random(manual.rdm_cor_terms, FactorLevel::Correlated);
  add_random(manual.grouped_terms, FactorLevel::Grouped);

  // Hetero groups: one per distinct distribution, in listing order; the
  // first token of each group is the mean covariate.
  std::vector<std::pair<Dist, std::vector<int>>> hetero;
  for (const std::string& tok : manual.hetro_in_means) {
    auto [name, dist] = parse_term_token(tok);
    claim(name);
    int k = factor_index(factor_names, name);
    spec.factors[static_cast<std::size_t>(k)].level = FactorLevel::HeteroMean;
    spec.factors[static_cast<std::size_t>(k)].dist = dist;
    order.push_back({k, name});
    auto it = std::find_if(hetero.begin(), hetero.end(),
                           [&](const auto& p) { return p.first == dist; });
    if (it == hetero.end())
      hetero.push_back({dist, {k}});
    else
      it->second.push_back(k);
  }
  for (auto& [dist, members] : hetero) {
    if (members.size() < 2)
      throw std::invalid_argument(
          "hetro_in_means group for distribution '" + dist_code(dist) +
          "' needs a mean covariate and at least one random member");
    HeteroGroup g;
    g.dist = dist;
    g.mean_covariates.push_back(members.front());
    g.random_members.assign(members.begin() + 1, members.end());
    spec.hetero_groups.push_back(std::move(g));
  }

  if (manual.transformations.size() != order.size())
    throw std::invalid_argument(
        "transformations list has " + std::to_string(manual.transformations.size()) +
        " entries but " + std::to_string(order.size()) + " terms are specified");
  for (std::size_t i = 0; i < order.size(); ++i) {
    Transform t = transform_from_string(manual.transformations[i]);
    if (order[i].factor < 0) {
      if (t != Transform::No)
        throw std::invalid_argument("the intercept cannot be transformed");
      continue;
    }
    spec.factors[static_cast<std::size_t>(order[i].factor)].transform = t;
  }

  if (spec.correlated_block().size() == 1)
    throw std::invalid_argument("rdm_cor_terms needs at least two factors");

  return spec;
}

}  // namespace countspec
