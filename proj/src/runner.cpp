#include "countspec/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>

namespace countspec {

namespace fs = std::filesystem;
using nlohmann::json;

FitSettings fit_settings(const RunConfig& cfg) {
  FitSettings s;
  s.method_ll = cfg.method_ll;
  s.n_draws = cfg.draws;
  s.generator = cfg.generator;
  s.draw_seed = cfg.seed;
  s.tn_bound = cfg.tn_bound;
  return s;
}

Prepared prepare(const RunConfig& cfg) {
  Dataset ds = load_csv(cfg.data_path);
  assign_roles(ds, cfg.terms);
  ConstraintSet cs = build_constraints(cfg, ds);

  SplitPlan plan;
  plan.test_fraction = cfg.test_percentage;
  plan.seed = cfg.seed;
  plan.unit = ds.has_panel() ? SplitUnit::Panel : SplitUnit::Observation;
  SplitIndices idx = split_indices(ds, plan);

  std::optional<ModelSpecification> manual;
  try {
    DecisionSpace space(std::move(cs));
    if (cfg.manual_fit)
      manual = parse_manual_specification(*cfg.manual_fit,
                                          space.constraints().factor_names);
    return Prepared{ds,
                    subset(ds, idx.train),
                    subset(ds, idx.test),
                    std::move(idx),
                    plan,
                    std::move(space),
                    std::move(manual)};
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
}

namespace {

void write_split_file(const std::string& path, const Dataset& ds,
                      const SplitPlan& plan, const SplitIndices& idx) {
  json j;
  json roles;
  for (const Column& c : ds.columns) roles[c.name] = to_string(c.role);
  j["roles"] = roles;
  j["unit"] = plan.unit == SplitUnit::Panel
                  ? "panel"
                  : (plan.unit == SplitUnit::Group ? "group" : "observation");
  j["test_fraction"] = plan.test_fraction;
  j["seed"] = plan.seed;
  j["train"] = idx.train;
  j["test"] = idx.test;
  if (!ds.group_labels.empty()) j["group_labels"] = ds.group_labels;
  if (!ds.panel_labels.empty()) j["panel_labels"] = ds.panel_labels;
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

std::vector<ArchiveEntry> sorted_entries(const ParetoArchive& archive) {
  std::vector<ArchiveEntry> out = archive.entries();
  std::sort(out.begin(), out.end(), [](const ArchiveEntry& a, const ArchiveEntry& b) {
    if (a.objectives != b.objectives) return a.objectives < b.objectives;
    return a.encoding < b.encoding;
  });
  return out;
}

std::string pareto_console_line(const std::vector<ArchiveEntry>& entries,
                                const std::vector<std::string>& names) {
  std::string out = "Pareto Solutions: [";
  char buf[64];
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) out += ", ";
    out += "{";
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (j) out += ", ";
      std::string lo = names[j];
      for (char& ch : lo) ch = static_cast<char>(std::tolower(ch));
      std::snprintf(buf, sizeof buf, "'%s': %.4f", lo.c_str(),
                    entries[i].objectives[j]);
      out += buf;
    }
    out += "}";
  }
  out += "]";
  return out;
}

void write_member_tables(const std::string& dir, ObjectiveEvaluator& ev,
                         const std::vector<ArchiveEntry>& entries) {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    FitResult fr = ev.fit_with_se(entries[i].spec);
    double bic = information_criteria(fr.loglik, fr.k, ev.train().n_obs()).bic;
    std::ofstream out(dir + "/model_" + std::to_string(i + 1) + ".txt");
    out << entries[i].encoding << '\n' << render_fit_table(fr, bic);
  }
}

int exceptional(std::ostream& console, const std::exception& e, int code) {
  console << "error: " << e.what() << '\n';
  return code;
}

}  // namespace

RunOutcome run(const RunConfig& cfg, std::ostream& console) {
  RunOutcome out;
  out.objective_names = cfg.objective_names();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    Prepared p = prepare(cfg);

    out.run_dir = cfg.out_dir.value_or("run_output");
    fs::create_directories(out.run_dir + "/models");
    {
      std::ofstream echo(out.run_dir + "/config_echo.json");
      echo << echo_config(cfg).dump(2) << '\n';
    }
    write_split_file(out.run_dir + "/split.json", p.data, p.plan, p.split);

    const bool single = cfg.manual_fit && !cfg.algorithm_given;
    FitSettings settings = fit_settings(cfg);

    ObjectiveEvaluator ev(p.space, p.train, p.test, settings, cfg.objective_names());
    out.objective_names = ev.objective_names();

    if (single) {
      FitResult fr = ev.fit_with_se(*p.manual);
      ObjectiveValues ov = evaluate_objectives(fr, *p.manual, p.train, p.test,
                                               {cfg.tn_bound, 30.0});
      std::string table = render_fit_table(fr, ov.bic);
      std::ofstream tf(out.run_dir + "/models/manual_fit.txt");
      tf << table;

      ArchiveEntry entry;
      entry.spec = *p.manual;
      entry.encoding = p.manual->encode(ev.space().constraints().factor_names);
      for (const auto& name : ev.objective_names())
        entry.objectives.push_back(ov.by_name(name));
      entry.loglik = fr.loglik;
      entry.converged = fr.converged;
      out.search.archive.insert(entry);
      write_archive_csv(out.run_dir + "/archive.csv", out.search.archive.entries(),
                        ev.objective_names());
      if (cfg.verbose > 0) console << table;
    } else {
      std::ofstream itlog(out.run_dir + "/iterations.log");
      SearchLog log(&itlog, &console, cfg.verbose);
      out.search = run_algorithm(cfg.algorithm, ev, p.manual, cfg.hp, cfg.seed, &log);

      std::vector<ArchiveEntry> entries = sorted_entries(out.search.archive);
      write_archive_csv(out.run_dir + "/archive.csv", entries, ev.objective_names());
      write_pareto_plot(out.run_dir + "/pareto_plot.csv", entries, ev.objective_names());
      write_pareto_svg(out.run_dir + "/pareto.svg", entries, ev.objective_names());
      write_member_tables(out.run_dir + "/models", ev, entries);

      std::ofstream summary(out.run_dir + "/summary.txt");
      summary << "algorithm: " << cfg.algorithm << '\n'
              << "stop: " << to_string(out.search.stop) << '\n'
              << "iterations: " << out.search.iterations << '\n'
              << "evaluations: " << out.search.evaluations << '\n'
              << "cache_hits: " << out.search.cache_hits << '\n'
              << "constraint_violations: " << out.search.constraint_violations << '\n'
              << "archive_size: " << out.search.archive.size() << '\n';

      if (cfg.verbose > 0) console << pareto_console_line(entries, ev.objective_names()) << '\n';
    }

    out.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cfg.verbose > 0)
      console << "Elapsed time: " << format_elapsed(out.elapsed_seconds) << '\n';
    out.exit_code = kOk;
    return out;
  } catch (const config_error& e) {
    out.exit_code = exceptional(console, e, kConfigError);
  } catch (const data_error& e) {
    out.exit_code = exceptional(console, e, kDataError);
  } catch (const std::exception& e) {
    out.exit_code = exceptional(console, e, kConfigError);
  }
  return out;
}

RunOutcome fit_single(const RunConfig& cfg, std::ostream& console) {
  if (!cfg.manual_fit) {
    console << "error: 'fit' needs a Manual_Fit block in the configuration\n";
    RunOutcome out;
    out.exit_code = kConfigError;
    return out;
  }
  RunConfig single = cfg;
  single.algorithm_given = false;
  return run(single, console);
}

namespace {

void apply_hyperparameter(Hyperparameters& hp, const std::string& key, const json& v) {
  auto num = [&]() { return v.get<double>(); };
  auto integer = [&]() { return v.get<int>(); };
  if (key == "_hms") hp.hms = integer();
  else if (key == "_hmcr") hp.hmcr = num();
  else if (key == "_par") hp.par = num();
  else if (key == "_mpai") hp.mpai = integer();
  else if (key == "_AI") hp.ai = integer();
  else if (key == "_cr") hp.cr = num();
  else if (key == "_crossover_perc") { hp.cr = num(); hp.sa_crossover = num(); }
  else if (key == "_pop_size") hp.pop_size = integer();
  else if (key == "alpha") hp.alpha = num();
  else if (key == "_ts" || key == "STEPS_PER_TEMP") hp.steps_per_temp = integer();
  else if (key == "INTL_ACPT") hp.intl_acpt = num();
  else if (key == "_num_intl_slns") hp.num_intl_slns = integer();
  else if (key == "_max_iter") hp.max_iter = integer();
  else if (key == "_max_time") hp.max_time = num();
  else if (key == "_max_iterations_improvement") hp.no_improve_cap = integer();
  else throw config_error("'" + key + "' is not a sweepable hyperparameter");
}

const std::set<std::string>& sweepable(const std::string& algorithm) {
  static const std::set<std::string> hs = {"_hms", "_hmcr", "_par", "_mpai"};
  static const std::set<std::string> de = {"_AI", "_cr", "_crossover_perc", "_pop_size"};
  static const std::set<std::string> sa = {"alpha", "_ts", "STEPS_PER_TEMP",
                                           "INTL_ACPT", "_num_intl_slns",
                                           "_crossover_perc"};
  if (algorithm == "hs") return hs;
  if (algorithm == "de") return de;
  return sa;
}

}  // namespace

int sweep(const RunConfig& cfg, const json& grid, int n_seeds,
          const std::string& out_csv, std::ostream& console) {
  try {
    if (!grid.is_object() || grid.empty())
      throw config_error("the sweep grid must be a non-empty JSON object");
    if (n_seeds < 1) throw config_error("the number of seeds must be >= 1");

    static const std::set<std::string> global = {"_max_iter", "_max_time",
                                                 "_max_iterations_improvement"};
    const std::set<std::string>& algo_keys = sweepable(cfg.algorithm);
    std::vector<std::string> keys;
    std::vector<std::vector<json>> values;
    for (const auto& [key, list] : grid.items()) {
      if (!algo_keys.count(key) && !global.count(key))
        throw config_error("'" + key + "' is not a hyperparameter of algorithm '" +
                           cfg.algorithm + "'");
      if (!list.is_array() || list.empty())
        throw config_error("grid entry '" + key + "' must be a non-empty list");
      keys.push_back(key);
      values.push_back(std::vector<json>(list.begin(), list.end()));
    }

    Dataset ds = load_csv(cfg.data_path);
    assign_roles(ds, cfg.terms);
    ConstraintSet cs = build_constraints(cfg, ds);
    DecisionSpace space(cs);
    std::optional<ModelSpecification> manual;
    if (cfg.manual_fit)
      manual = parse_manual_specification(*cfg.manual_fit, cs.factor_names);

    std::ofstream out(out_csv);
    if (!out) throw data_error("cannot write '" + out_csv + "'");
    for (const auto& k : keys) out << k << ',';
    out << "seed,best_weighted_sum,archive_size,elapsed_seconds\n";

    std::vector<std::size_t> pos(keys.size(), 0);
    long rows = 0;
    bool done = keys.empty();
    while (!done) {
      Hyperparameters hp = cfg.hp;
      for (std::size_t i = 0; i < keys.size(); ++i)
        apply_hyperparameter(hp, keys[i], values[i][pos[i]]);
      validate_hyperparameters(hp);

      for (int s = 1; s <= n_seeds; ++s) {
        SplitPlan plan{cfg.test_percentage, static_cast<std::uint64_t>(s),
                       ds.has_panel() ? SplitUnit::Panel : SplitUnit::Observation};
        auto [train, test] = split(ds, plan);
        FitSettings settings = fit_settings(cfg);
        settings.draw_seed = static_cast<std::uint64_t>(s);
        ObjectiveEvaluator ev(space, train, test, settings, cfg.objective_names());
        SearchLog log(nullptr, nullptr, 0);

        const auto t0 = std::chrono::steady_clock::now();
        SearchResult sr = run_algorithm(cfg.algorithm, ev, manual, hp,
                                        static_cast<std::uint64_t>(s), &log);
        double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        // Weighted sum on IQR-normalized objectives, scales taken from the
        // initial population of the run.
        std::size_t init_n = cfg.algorithm == "hs"
                                 ? static_cast<std::size_t>(hp.hms)
                                 : (cfg.algorithm == "de"
                                        ? static_cast<std::size_t>(hp.pop_size)
                                        : static_cast<std::size_t>(hp.num_intl_slns));
        const auto& all = log.all_objectives();
        init_n = std::min(init_n, all.size());
        std::size_t n_obj = ev.objective_names().size();
        std::vector<double> iqr(n_obj, 1.0);
        for (std::size_t j = 0; j < n_obj; ++j) {
          std::vector<double> vals;
          for (std::size_t i = 0; i < init_n; ++i)
            if (std::isfinite(all[i][j])) vals.push_back(all[i][j]);
          if (vals.size() >= 2) {
            std::sort(vals.begin(), vals.end());
            double w = quantile_sorted(vals, 0.75) - quantile_sorted(vals, 0.25);
            if (w > 0) iqr[j] = w;
          }
        }
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : sr.archive.entries()) {
          double ws = 0;
          for (std::size_t j = 0; j < n_obj; ++j)
            ws += std::min(e.objectives[j], 1e15) / iqr[j];
          best = std::min(best, ws);
        }

        char buf[96];
        for (std::size_t i = 0; i < keys.size(); ++i)
          out << values[i][pos[i]].dump() << ',';
        std::snprintf(buf, sizeof buf, "%d,%.6f,%zu,%.3f\n", s, best,
                      sr.archive.size(), elapsed);
        out << buf;
        ++rows;
      }

      // Odometer over the grid.
      std::size_t i = 0;
      for (; i < keys.size(); ++i) {
        if (++pos[i] < values[i].size()) break;
        pos[i] = 0;
      }
      done = i == keys.size();
    }
    console << "sweep complete: " << rows << " rows -> " << out_csv << '\n';
    return kOk;
  } catch (const config_error& e) {
    return exceptional(console, e, kConfigError);
  } catch (const data_error& e) {
    return exceptional(console, e, kDataError);
  } catch (const std::exception& e) {
    return exceptional(console, e, kConfigError);
  }
}

}  // namespace countspec
