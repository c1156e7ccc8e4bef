#include "countspec/config.hpp"

#include <fstream>
#include <set>

namespace countspec {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw config_error(msg); }

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) bad("'" + key + "' must be a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) bad("'" + key + "' must be an integer");
  return v.get<int>();
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) bad("'" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<std::string> as_string_list(const json& v, const std::string& key) {
  if (!v.is_array()) bad("'" + key + "' must be a list");
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(as_string(e, key));
  return out;
}

std::optional<std::string> opt_string(const json& v, const std::string& key) {
  if (v.is_null()) return std::nullopt;
  return as_string(v, key);
}

std::vector<Transform> parse_transform_list(const json& v, const std::string& key) {
  std::vector<Transform> out;
  for (const std::string& s : as_string_list(v, key)) {
    try {
      out.push_back(transform_from_string(s));
    } catch (const std::invalid_argument& e) {
      bad(std::string(e.what()) + " in '" + key + "'");
    }
  }
  return out;
}

std::vector<Dist> parse_dist_list(const json& v, const std::string& key) {
  std::vector<Dist> out;
  for (const std::string& s : as_string_list(v, key)) {
    try {
      out.push_back(dist_from_string(s));
    } catch (const std::invalid_argument& e) {
      bad(std::string(e.what()) + " in '" + key + "'");
    }
  }
  return out;
}

}  // namespace

std::vector<int> expand_levels(const json& v) {
  std::set<int> levels;
  auto add = [&](int lv) {
    if (lv == 6) {
      for (int i = 0; i <= 5; ++i) levels.insert(i);  // 6 means everything
    } else if (lv >= 0 && lv <= 5) {
      levels.insert(lv);
    } else {
      bad("level " + std::to_string(lv) + " is out of range 0..6");
    }
  };
  if (v.is_number_integer()) {
    int c = v.get<int>();
    if (c == 6) {
      add(6);
    } else if (c >= 0 && c <= 5) {
      for (int i = 0; i <= c; ++i) levels.insert(i);
    } else {
      bad("complexity_level " + std::to_string(c) + " is out of range 0..6");
    }
  } else if (v.is_array()) {
    if (v.empty()) bad("no admissible level: the level list is empty");
    for (const auto& e : v) add(as_int(e, "levels"));
  } else {
    bad("levels must be an integer or a list of integers");
  }
  return {levels.begin(), levels.end()};
}

ManualSpec parse_manual_block(const json& j) {
  if (!j.is_object()) bad("Manual_Fit must be an object");
  static const std::set<std::string> known = {
      "fixed_terms", "rdm_terms",       "rdm_cor_terms", "grouped_terms",
      "hetro_in_means", "transformations", "dispersion"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) bad("unknown Manual_Fit key '" + key + "'");

  ManualSpec m;
  if (j.contains("fixed_terms")) m.fixed_terms = as_string_list(j["fixed_terms"], "fixed_terms");
  if (j.contains("rdm_terms")) m.rdm_terms = as_string_list(j["rdm_terms"], "rdm_terms");
  if (j.contains("rdm_cor_terms"))
    m.rdm_cor_terms = as_string_list(j["rdm_cor_terms"], "rdm_cor_terms");
  if (j.contains("grouped_terms"))
    m.grouped_terms = as_string_list(j["grouped_terms"], "grouped_terms");
  if (j.contains("hetro_in_means"))
    m.hetro_in_means = as_string_list(j["hetro_in_means"], "hetro_in_means");
  if (j.contains("transformations"))
    m.transformations = as_string_list(j["transformations"], "transformations");
  if (j.contains("dispersion")) m.dispersion = as_int(j["dispersion"], "dispersion");
  return m;
}

RunConfig parse_config(const json& j) {
  if (!j.is_object()) bad("configuration must be a JSON object");
  RunConfig cfg;

  static const std::set<std::string> known = {
      "data", "model_terms", "_obj_1", "_obj_2", "test_percentage",
      "complexity_level", "model_types", "_distributions", "_transformations",
      "algorithm", "_hms", "_hmcr", "_par", "_mpai", "pitch_adjustment",
      "_AI", "_cr", "_crossover_perc", "_pop_size",
      "alpha", "_ts", "STEPS_PER_TEMP", "INTL_ACPT", "_num_intl_slns",
      "_max_time", "_max_iter", "MAX_ITERATIONS",
      "_max_iterations_improvement", "_WIP",
      "method_ll", "_max_characteristics", "verbose", "seed",
      "draws", "draw_generator", "tn_bound",
      "Manual_Fit", "Manuel_Fit", "variable_decisions", "out_dir"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) bad("unknown configuration key '" + key + "'");

  if (!j.contains("data")) bad("missing required key 'data'");
  cfg.data_path = as_string(j["data"], "data");

  if (j.contains("model_terms")) {
    const json& mt = j["model_terms"];
    if (!mt.is_object()) bad("'model_terms' must be an object");
    for (const auto& [key, value] : mt.items())
      if (key != "Y" && key != "group" && key != "panels" && key != "Offset")
        bad("unknown model_terms key '" + key + "'");
    if (!mt.contains("Y")) bad("model_terms needs 'Y'");
    cfg.terms.y = as_string(mt["Y"], "Y");
    if (mt.contains("group")) cfg.terms.group = opt_string(mt["group"], "group");
    if (mt.contains("panels")) cfg.terms.panels = opt_string(mt["panels"], "panels");
    if (mt.contains("Offset")) cfg.terms.offset = opt_string(mt["Offset"], "Offset");
  } else {
    bad("missing required key 'model_terms'");
  }

  if (j.contains("_obj_1")) cfg.obj1 = as_string(j["_obj_1"], "_obj_1");
  if (j.contains("_obj_2")) cfg.obj2 = opt_string(j["_obj_2"], "_obj_2");
  static const std::set<std::string> crits = {"BIC", "AIC", "HQIC", "CAIC", "AICc"};
  if (!crits.count(cfg.obj1)) bad("'_obj_1' must be one of BIC, AIC, HQIC, CAIC, AICc");
  if (cfg.obj2 && !crits.count(*cfg.obj2) && *cfg.obj2 != "MSPE")
    bad("'_obj_2' must be an information criterion or MSPE");
  if (cfg.obj2 && *cfg.obj2 == cfg.obj1) bad("'_obj_2' repeats '_obj_1'");

  if (j.contains("test_percentage")) {
    cfg.test_percentage = as_number(j["test_percentage"], "test_percentage");
    if (cfg.test_percentage < 0.0 || cfg.test_percentage >= 1.0)
      bad("'test_percentage' must lie in [0, 1)");
  }
  if (j.contains("complexity_level")) cfg.complexity_levels = expand_levels(j["complexity_level"]);

  if (j.contains("model_types")) {
    json mt = j["model_types"];
    if (mt.is_array() && mt.size() == 1 && mt[0].is_array()) mt = mt[0];
    if (!mt.is_array() || mt.empty()) bad("'model_types' must be a non-empty list");
    cfg.model_types.clear();
    for (const auto& e : mt) {
      int v = as_int(e, "model_types");
      if (v == 0) cfg.model_types.push_back(Family::Poisson);
      else if (v == 1) cfg.model_types.push_back(Family::NegBin);
      else bad("model type " + std::to_string(v) + " unknown (0=Poisson, 1=NegBin)");
    }
  }

  if (j.contains("_distributions"))
    cfg.distributions = parse_dist_list(j["_distributions"], "_distributions");
  if (j.contains("_transformations"))
    cfg.transformations = parse_transform_list(j["_transformations"], "_transformations");
  if (cfg.distributions.empty()) bad("'_distributions' must not be empty");
  if (cfg.transformations.empty()) bad("'_transformations' must not be empty");

  if (j.contains("algorithm") && !j["algorithm"].is_null()) {
    cfg.algorithm = as_string(j["algorithm"], "algorithm");
    cfg.algorithm_given = true;
    if (cfg.algorithm != "hs" && cfg.algorithm != "sa" && cfg.algorithm != "de")
      bad("'algorithm' must be hs, sa or de");
  }

  Hyperparameters& hp = cfg.hp;
  if (j.contains("_hms")) hp.hms = as_int(j["_hms"], "_hms");
  if (j.contains("_hmcr")) hp.hmcr = as_number(j["_hmcr"], "_hmcr");
  if (j.contains("_par")) hp.par = as_number(j["_par"], "_par");
  if (j.contains("_mpai")) hp.mpai = as_int(j["_mpai"], "_mpai");
  if (j.contains("pitch_adjustment")) {
    std::string rule = as_string(j["pitch_adjustment"], "pitch_adjustment");
    if (rule == "ge") hp.pitch_literal_ge = true;
    else if (rule == "le") hp.pitch_literal_ge = false;
    else bad("'pitch_adjustment' must be 'ge' or 'le'");
  }
  if (j.contains("_AI")) hp.ai = as_int(j["_AI"], "_AI");
  if (j.contains("_crossover_perc")) {
    double v = as_number(j["_crossover_perc"], "_crossover_perc");
    hp.cr = v;
    hp.sa_crossover = v;
  }
  if (j.contains("_cr")) hp.cr = as_number(j["_cr"], "_cr");
  if (j.contains("_pop_size")) hp.pop_size = as_int(j["_pop_size"], "_pop_size");
  if (j.contains("alpha")) hp.alpha = as_number(j["alpha"], "alpha");
  if (j.contains("STEPS_PER_TEMP")) hp.steps_per_temp = as_int(j["STEPS_PER_TEMP"], "STEPS_PER_TEMP");
  if (j.contains("_ts")) hp.steps_per_temp = as_int(j["_ts"], "_ts");
  if (j.contains("INTL_ACPT")) hp.intl_acpt = as_number(j["INTL_ACPT"], "INTL_ACPT");
  if (j.contains("_num_intl_slns")) hp.num_intl_slns = as_int(j["_num_intl_slns"], "_num_intl_slns");
  if (j.contains("MAX_ITERATIONS")) hp.max_iter = as_int(j["MAX_ITERATIONS"], "MAX_ITERATIONS");
  if (j.contains("_max_iter")) hp.max_iter = as_int(j["_max_iter"], "_max_iter");
  if (j.contains("_max_time")) hp.max_time = as_number(j["_max_time"], "_max_time");
  if (j.contains("_WIP")) hp.no_improve_cap = as_int(j["_WIP"], "_WIP");
  if (j.contains("_max_iterations_improvement"))
    hp.no_improve_cap = as_int(j["_max_iterations_improvement"], "_max_iterations_improvement");
  try {
    validate_hyperparameters(hp);
  } catch (const std::invalid_argument& e) {
    bad(e.what());
  }

  if (j.contains("method_ll")) {
    cfg.method_ll = as_string(j["method_ll"], "method_ll");
    if (cfg.method_ll != "L-BFGS-B" && cfg.method_ll != "BFGS_2" &&
        cfg.method_ll != "Nelder-Mead-BFGS")
      bad("'method_ll' must be 'L-BFGS-B', 'BFGS_2' or 'Nelder-Mead-BFGS'");
  }
  if (j.contains("_max_characteristics")) {
    cfg.max_characteristics = as_int(j["_max_characteristics"], "_max_characteristics");
    if (cfg.max_characteristics < 1) bad("'_max_characteristics' must be >= 1");
  }
  if (j.contains("verbose")) {
    cfg.verbose = as_int(j["verbose"], "verbose");
    if (cfg.verbose < 0 || cfg.verbose > 2) bad("'verbose' must be 0, 1 or 2");
  }
  if (j.contains("seed")) cfg.seed = static_cast<std::uint64_t>(as_int(j["seed"], "seed"));
  if (j.contains("draws")) {
    cfg.draws = as_int(j["draws"], "draws");
    if (cfg.draws < 1) bad("'draws' must be >= 1");
  }
  if (j.contains("draw_generator")) {
    std::string g = as_string(j["draw_generator"], "draw_generator");
    if (g == "halton") cfg.generator = DrawGenerator::Halton;
    else if (g == "pseudorandom") cfg.generator = DrawGenerator::Pseudorandom;
    else bad("'draw_generator' must be 'halton' or 'pseudorandom'");
  }
  if (j.contains("tn_bound")) {
    cfg.tn_bound = as_number(j["tn_bound"], "tn_bound");
    if (!(cfg.tn_bound > 0)) bad("'tn_bound' must be > 0");
  }

  if (j.contains("Manual_Fit") && j.contains("Manuel_Fit"))
    bad("give either 'Manual_Fit' or 'Manuel_Fit', not both");
  if (j.contains("Manual_Fit")) cfg.manual_fit = parse_manual_block(j["Manual_Fit"]);
  if (j.contains("Manuel_Fit")) {
    cfg.manual_fit = parse_manual_block(j["Manuel_Fit"]);
    cfg.manual_fit_deprecated_spelling = true;
  }

  if (j.contains("variable_decisions")) {
    const json& vd = j["variable_decisions"];
    if (!vd.is_object()) bad("'variable_decisions' must be an object");
    for (const auto& [factor, block] : vd.items()) {
      if (!block.is_object()) bad("variable_decisions entry '" + factor + "' must be an object");
      VariableDecision d;
      for (const auto& [key, value] : block.items()) {
        if (key == "levels") {
          d.levels = expand_levels(value);
        } else if (key == "transformations") {
          if (!value.is_array() || value.empty())
            bad("factor '" + factor + "': transformations must be a non-empty list");
          d.transformations = parse_transform_list(value, "transformations");
        } else if (key == "distributions") {
          d.distributions = parse_dist_list(value, "distributions");
        } else {
          bad("unknown variable_decisions key '" + key + "' for factor '" + factor + "'");
        }
      }
      cfg.variable_decisions[factor] = std::move(d);
    }
  }

  if (j.contains("out_dir")) cfg.out_dir = as_string(j["out_dir"], "out_dir");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open configuration file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    bad("configuration is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

json echo_config(const RunConfig& cfg) {
  json j;
  j["data"] = cfg.data_path;
  json mt;
  mt["Y"] = cfg.terms.y;
  mt["group"] = cfg.terms.group ? json(*cfg.terms.group) : json(nullptr);
  mt["panels"] = cfg.terms.panels ? json(*cfg.terms.panels) : json(nullptr);
  mt["Offset"] = cfg.terms.offset ? json(*cfg.terms.offset) : json(nullptr);
  j["model_terms"] = mt;
  j["_obj_1"] = cfg.obj1;
  j["_obj_2"] = cfg.obj2 ? json(*cfg.obj2) : json(nullptr);
  j["test_percentage"] = cfg.test_percentage;
  j["complexity_level"] = cfg.complexity_levels;
  {
    std::vector<int> mts;
    for (Family f : cfg.model_types) mts.push_back(static_cast<int>(f));
    j["model_types"] = mts;
  }
  {
    std::vector<std::string> ds;
    for (Dist d : cfg.distributions) ds.push_back(dist_code(d));
    j["_distributions"] = ds;
  }
  {
    std::vector<std::string> ts;
    for (Transform t : cfg.transformations) ts.push_back(to_string(t));
    j["_transformations"] = ts;
  }
  j["algorithm"] = cfg.algorithm_given ? json(cfg.algorithm) : json(nullptr);
  j["_hms"] = cfg.hp.hms;
  j["_hmcr"] = cfg.hp.hmcr;
  j["_par"] = cfg.hp.par;
  j["_mpai"] = cfg.hp.mpai;
  j["pitch_adjustment"] = cfg.hp.pitch_literal_ge ? "ge" : "le";
  j["_AI"] = cfg.hp.ai;
  j["_cr"] = cfg.hp.cr;
  j["_crossover_perc"] = cfg.hp.sa_crossover;
  j["_pop_size"] = cfg.hp.pop_size;
  j["alpha"] = cfg.hp.alpha;
  j["_ts"] = cfg.hp.steps_per_temp;
  j["INTL_ACPT"] = cfg.hp.intl_acpt;
  j["_num_intl_slns"] = cfg.hp.num_intl_slns;
  j["_max_iter"] = cfg.hp.max_iter;
  j["_max_time"] = cfg.hp.max_time;
  j["_max_iterations_improvement"] = cfg.hp.no_improve_cap;
  j["method_ll"] = cfg.method_ll;
  j["_max_characteristics"] = cfg.max_characteristics;
  j["verbose"] = cfg.verbose;
  j["seed"] = cfg.seed;
  j["draws"] = cfg.draws;
  j["draw_generator"] = cfg.generator == DrawGenerator::Halton ? "halton" : "pseudorandom";
  j["tn_bound"] = cfg.tn_bound;
  if (cfg.manual_fit) {
    const ManualSpec& m = *cfg.manual_fit;
    json mf;
    mf["fixed_terms"] = m.fixed_terms;
    mf["rdm_terms"] = m.rdm_terms;
    mf["rdm_cor_terms"] = m.rdm_cor_terms;
    mf["grouped_terms"] = m.grouped_terms;
    mf["hetro_in_means"] = m.hetro_in_means;
    mf["transformations"] = m.transformations;
    mf["dispersion"] = m.dispersion;
    j["Manual_Fit"] = mf;
  }
  if (!cfg.variable_decisions.empty()) {
    json vd;
    for (const auto& [factor, d] : cfg.variable_decisions) {
      json block;
      if (d.levels) block["levels"] = *d.levels;
      if (d.transformations) {
        std::vector<std::string> ts;
        for (Transform t : *d.transformations) ts.push_back(to_string(t));
        block["transformations"] = ts;
      }
      if (d.distributions) {
        std::vector<std::string> ds;
        for (Dist dd : *d.distributions) ds.push_back(dist_code(dd));
        block["distributions"] = ds;
      }
      vd[factor] = block;
    }
    j["variable_decisions"] = vd;
  }
  if (cfg.out_dir) j["out_dir"] = *cfg.out_dir;
  return j;
}

ConstraintSet build_constraints(const RunConfig& cfg, const Dataset& ds) {
  ConstraintSet cs;
  cs.has_group = ds.has_group();
  cs.max_characteristics = cfg.max_characteristics;
  cs.families = cfg.model_types;

  const std::vector<int> cand = ds.candidate_columns();
  for (int c : cand)
    cs.factor_names.push_back(ds.columns[static_cast<std::size_t>(c)].name);

  for (const auto& [factor, d] : cfg.variable_decisions)
    if (std::find(cs.factor_names.begin(), cs.factor_names.end(), factor) ==
        cs.factor_names.end())
      throw config_error("variable_decisions names unknown factor '" + factor + "'");

  for (std::size_t k = 0; k < cand.size(); ++k) {
    const std::string& name = cs.factor_names[k];
    const Vec& values = ds.columns[static_cast<std::size_t>(cand[k])].values;
    FactorConstraint fc;

    auto it = cfg.variable_decisions.find(name);
    const VariableDecision* vd = it == cfg.variable_decisions.end() ? nullptr : &it->second;

    fc.levels = vd && vd->levels ? *vd->levels : cfg.complexity_levels;
    if (fc.levels.empty())
      throw config_error("factor '" + name + "': no admissible level");

    std::vector<Transform> wanted =
        vd && vd->transformations ? *vd->transformations : cfg.transformations;
    for (Transform t : wanted)
      if (transformation_feasible(values, t)) fc.transforms.push_back(t);
    if (fc.transforms.empty())
      throw config_error("factor '" + name +
                         "': no requested transformation is feasible for its values");

    fc.dists = vd && vd->distributions && !vd->distributions->empty()
                   ? *vd->distributions
                   : cfg.distributions;
    cs.factors.push_back(std::move(fc));
  }
  return cs;
}

}  // namespace countspec
