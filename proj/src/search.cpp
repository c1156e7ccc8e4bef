#include "countspec/search.hpp"

#include <array>
#include <cstdio>

namespace countspec {

void validate_hyperparameters(const Hyperparameters& hp) {
  auto prob = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
  };
  prob(hp.hmcr, "_hmcr");
  prob(hp.par, "_par");
  prob(hp.cr, "_cr");
  prob(hp.sa_crossover, "_crossover_perc");
  if (hp.hms < 1) throw std::invalid_argument("_hms must be >= 1");
  if (hp.mpai < 1) throw std::invalid_argument("_mpai must be >= 1");
  if (hp.pop_size < 1) throw std::invalid_argument("_pop_size must be >= 1");
  if (hp.num_intl_slns < 1) throw std::invalid_argument("_num_intl_slns must be >= 1");
  if (hp.steps_per_temp < 1) throw std::invalid_argument("_ts must be >= 1");
  if (!(hp.alpha > 0.0 && hp.alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1)");
  if (!(hp.intl_acpt > 0.0 && hp.intl_acpt < 1.0))
    throw std::invalid_argument("INTL_ACPT must lie in (0, 1)");
  if (hp.max_iter < 1) throw std::invalid_argument("_max_iter must be >= 1");
  if (!(hp.max_time > 0)) throw std::invalid_argument("_max_time must be > 0");
  if (hp.no_improve_cap < 1)
    throw std::invalid_argument("_max_iterations_improvement must be >= 1");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::None: return "none";
    case StopReason::TimeLimit: return "time limit";
    case StopReason::MaxIterations: return "max iterations";
    case StopReason::NoImprovement: return "no improvement";
  }
  return "?";
}

double TerminationState::elapsed() const {
  if (forced_elapsed) return *forced_elapsed;
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

StopReason check_termination(const TerminationState& state, const Hyperparameters& hp) {
  if (state.elapsed() > hp.max_time) return StopReason::TimeLimit;
  if (state.iteration >= hp.max_iter) return StopReason::MaxIterations;
  if (state.iterations_since_acceptance >= hp.no_improve_cap)
    return StopReason::NoImprovement;
  return StopReason::None;
}

void SearchLog::record(const std::string& encoding, double loglik, const ObjVec& obj,
                       bool accepted, std::size_t archive_size, bool pareto_added) {
  ++line_;
  if (best_so_far_.empty()) best_so_far_.assign(obj.size(), std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < obj.size(); ++j)
    best_so_far_[j] = std::min(best_so_far_[j], obj[j]);
  best_history_.push_back(best_so_far_);
  all_objectives_.push_back(obj);

  char buf[256];
  std::string line = "iter=" + std::to_string(line_) + " spec=" + encoding;
  std::snprintf(buf, sizeof buf, " ll=%.6f", loglik);
  line += buf;
  for (std::size_t j = 0; j < obj.size(); ++j) {
    std::snprintf(buf, sizeof buf, " obj%zu=%.6f", j + 1, obj[j]);
    line += buf;
  }
  std::snprintf(buf, sizeof buf, " accepted=%d archive=%zu", accepted ? 1 : 0,
                archive_size);
  line += buf;

  if (file_) (*file_) << line << '\n';
  if (console_ && (verbose_ == 1 || (verbose_ == 2 && (accepted || pareto_added))))
    (*console_) << line << '\n';
}

ObjectiveEvaluator::ObjectiveEvaluator(DecisionSpace space, Dataset train,
                                       Dataset test, FitSettings settings,
                                       std::vector<std::string> objectives)
    : space_(std::move(space)),
      train_(std::move(train)),
      test_(std::move(test)),
      settings_(std::move(settings)),
      objectives_(std::move(objectives)) {
  settings_.compute_se = false;
  if (objectives_.empty()) objectives_ = {"BIC"};
  // MSPE needs a held-out set; without one the search degrades to a single
  // objective.
  if (test_.n_obs() == 0) {
    std::erase(objectives_, std::string("MSPE"));
    if (objectives_.empty()) objectives_ = {"BIC"};
  }
}

EvalOutcome ObjectiveEvaluator::evaluate(const ModelSpecification& spec) {
  const std::string key = spec.encode(space_.constraints().factor_names);
  if (auto it = cache_.find(key); it != cache_.end()) {
    ++n_cache_hits_;
    EvalOutcome out = it->second;
    out.cached = true;
    return out;
  }
  if (!space_.validate(spec).empty()) ++n_violations_;

  ++n_eval_;
  FitResult f = fit(spec, train_, settings_);
  EvalOutcome out;
  out.loglik = f.loglik;
  out.converged = f.converged;
  out.full = evaluate_objectives(f, spec, train_, test_,
                                 {settings_.tn_bound, settings_.clamp_bound});
  for (const std::string& name : objectives_)
    out.objectives.push_back(out.full.by_name(name));
  cache_.emplace(key, out);
  return out;
}

FitResult ObjectiveEvaluator::fit_with_se(const ModelSpecification& spec) const {
  FitSettings s = settings_;
  s.compute_se = true;
  return fit(spec, train_, s);
}

std::array<int, 3> pick_donors(Rng& rng, int pop_size, int p) {
  if (pop_size < 4)
    throw std::invalid_argument("differential evolution needs a population of >= 4");
  std::array<int, 3> r{};
  r[0] = rng.uniform_int(pop_size);
  while (r[0] == p) r[0] = rng.uniform_int(pop_size);
  r[1] = rng.uniform_int(pop_size);
  while (r[1] == p || r[1] == r[0]) r[1] = rng.uniform_int(pop_size);
  r[2] = rng.uniform_int(pop_size);
  while (r[2] == p || r[2] == r[0] || r[2] == r[1]) r[2] = rng.uniform_int(pop_size);
  return r;
}

namespace {

struct Member {
  ModelSpecification spec;
  std::string enc;
  std::vector<int> idx;
  ObjVec obj;
  double ll = -std::numeric_limits<double>::infinity();
};

Member make_member(ObjectiveEvaluator& ev, const ModelSpecification& spec) {
  Member m;
  m.spec = spec;
  m.enc = spec.encode(ev.space().constraints().factor_names);
  m.idx = ev.space().encode(ev.space().canonicalize(spec));
  EvalOutcome out = ev.evaluate(spec);
  m.obj = out.objectives;
  m.ll = out.loglik;
  return m;
}

// Componentwise "no worse in both objectives".
bool no_worse(const ObjVec& a, const ObjVec& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

void sort_by_spea2(std::vector<Member>& pop) {
  std::vector<ObjVec> objs;
  objs.reserve(pop.size());
  for (const auto& m : pop) objs.push_back(m.obj);
  std::vector<int> order = spea2_order(objs);
  std::vector<Member> out;
  out.reserve(pop.size());
  for (int i : order) out.push_back(std::move(pop[static_cast<std::size_t>(i)]));
  pop.swap(out);
}

void notify_population(const SearchHooks* hooks, const std::vector<Member>& pop) {
  if (!hooks || !hooks->on_population) return;
  std::vector<ObjVec> objs;
  objs.reserve(pop.size());
  for (const auto& m : pop) objs.push_back(m.obj);
  hooks->on_population(objs);
}

std::vector<Member> initial_population(ObjectiveEvaluator& ev,
                                       const std::optional<ModelSpecification>& initial,
                                       int size, Rng& rng, ParetoArchive& archive,
                                       SearchLog* log) {
  std::vector<Member> pop;
  pop.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    ModelSpecification spec = (i == 0 && initial)
                                  ? *initial
                                  : ev.space().random_specification(rng);
    Member m = make_member(ev, spec);
    bool added = archive.insert({m.spec, m.enc, m.obj, m.ll, std::isfinite(m.ll)});
    if (log) log->record(m.enc, m.ll, m.obj, true, archive.size(), added);
    pop.push_back(std::move(m));
  }
  return pop;
}

void finish(SearchResult& res, const ObjectiveEvaluator& ev,
            const TerminationState& state) {
  res.iterations = state.iteration;
  res.elapsed_seconds = state.elapsed();
  res.evaluations = ev.evaluations();
  res.cache_hits = ev.cache_hits();
  res.constraint_violations = ev.constraint_violations();
}

}  // namespace

SearchResult harmony_search(ObjectiveEvaluator& ev,
                            const std::optional<ModelSpecification>& initial,
                            const Hyperparameters& hp, std::uint64_t seed,
                            SearchLog* log, const SearchHooks* hooks) {
  validate_hyperparameters(hp);
  const DecisionSpace& space = ev.space();
  Rng rng(seed);
  SearchResult res;
  TerminationState state;

  std::vector<Member> memory =
      initial_population(ev, initial, hp.hms, rng, res.archive, log);
  sort_by_spea2(memory);
  notify_population(hooks, memory);

  while ((res.stop = check_termination(state, hp)) == StopReason::None) {
    // One new harmony: per slot, memory consideration then pitch adjustment.
    std::vector<int> idx(static_cast<std::size_t>(space.n_slots()));
    for (int j = 0; j < space.n_slots(); ++j) {
      const int card = space.cardinality(j);
      if (rng.uniform01() <= hp.hmcr) {
        int r = rng.uniform_int(hp.hms);
        idx[static_cast<std::size_t>(j)] =
            memory[static_cast<std::size_t>(r)].idx[static_cast<std::size_t>(j)];
      } else {
        idx[static_cast<std::size_t>(j)] = rng.uniform_int(card);
      }
      double u = rng.uniform01();
      bool adjust = hp.pitch_literal_ge ? (u >= hp.par) : (u <= hp.par);
      if (adjust) {
        int delta = 1 + rng.uniform_int(hp.mpai);
        int sign = rng.uniform01() < 0.5 ? -1 : 1;
        idx[static_cast<std::size_t>(j)] =
            euclid_mod(idx[static_cast<std::size_t>(j)] + sign * delta, card);
      }
    }
    Member cand = make_member(ev, space.decode(idx));

    bool accepted = no_worse(cand.obj, memory.back().obj);
    bool added = false;
    if (accepted)
      added = res.archive.insert(
          {cand.spec, cand.enc, cand.obj, cand.ll, std::isfinite(cand.ll)});
    if (log) log->record(cand.enc, cand.ll, cand.obj, accepted, res.archive.size(), added);
    if (accepted) {
      memory.back() = std::move(cand);
      sort_by_spea2(memory);
      state.accepted();
    } else {
      state.rejected();
    }
    notify_population(hooks, memory);
    ++state.iteration;
  }
  finish(res, ev, state);
  return res;
}

SearchResult simulated_annealing(ObjectiveEvaluator& ev,
                                 const std::optional<ModelSpecification>& initial,
                                 const Hyperparameters& hp, std::uint64_t seed,
                                 SearchLog* log, const SearchHooks* hooks) {
  validate_hyperparameters(hp);
  const DecisionSpace& space = ev.space();
  Rng rng(seed);
  SearchResult res;
  TerminationState state;

  std::vector<Member> pop =
      initial_population(ev, initial, hp.num_intl_slns, rng, res.archive, log);

  // Scale-free objective deltas: divide by the interquartile range of each
  // objective over the initial population.
  const std::size_t n_obj = pop.front().obj.size();
  std::vector<double> iqr(n_obj, 1.0);
  for (std::size_t j = 0; j < n_obj; ++j) {
    std::vector<double> vals;
    for (const auto& m : pop)
      if (std::isfinite(m.obj[j])) vals.push_back(m.obj[j]);
    if (vals.size() >= 2) {
      std::sort(vals.begin(), vals.end());
      double w = quantile_sorted(vals, 0.75) - quantile_sorted(vals, 0.25);
      if (w > 0) iqr[j] = w;
    }
  }
  auto norm_delta = [&](const ObjVec& from, const ObjVec& to) {
    double d = 0.0;
    for (std::size_t j = 0; j < n_obj; ++j) {
      double a = std::min(from[j], 1e15);
      double b = std::min(to[j], 1e15);
      d += (b - a) / iqr[j];
    }
    return d;
  };

  // T0 from the initial acceptance rate against the mean uphill delta.
  double mean_up = 0.0;
  long n_up = 0;
  for (const auto& a : pop)
    for (const auto& b : pop) {
      double d = norm_delta(a.obj, b.obj);
      if (d > 0) {
        mean_up += d;
        ++n_up;
      }
    }
  mean_up = n_up > 0 ? mean_up / static_cast<double>(n_up) : 1.0;
  double temperature = -mean_up / std::log(hp.intl_acpt);
  if (!(temperature > 0) || !std::isfinite(temperature)) temperature = 1.0;

  // Incumbent: SPEA2-best of the Pareto subset of the initial population.
  std::vector<ObjVec> objs;
  for (const auto& m : pop) objs.push_back(m.obj);
  std::vector<int> front = non_dominated_indices(objs);
  std::vector<Member> pareto;
  for (int i : front) pareto.push_back(pop[static_cast<std::size_t>(i)]);
  sort_by_spea2(pareto);
  Member incumbent = pareto.front();

  long proposals = 0;
  while ((res.stop = check_termination(state, hp)) == StopReason::None) {
    Member cand = make_member(ev, space.neighbor(incumbent.spec, rng));

    bool improving = false;
    for (std::size_t j = 0; j < n_obj; ++j)
      if (cand.obj[j] < incumbent.obj[j]) improving = true;

    bool accepted = improving;
    if (!accepted) {
      double q = std::exp(-norm_delta(incumbent.obj, cand.obj) / temperature);
      accepted = rng.uniform01() < q;
    }
    bool added = res.archive.insert(
        {cand.spec, cand.enc, cand.obj, cand.ll, std::isfinite(cand.ll)});
    if (log) log->record(cand.enc, cand.ll, cand.obj, accepted, res.archive.size(), added);
    if (accepted) incumbent = std::move(cand);
    if (accepted || added)
      state.accepted();
    else
      state.rejected();

    ++proposals;
    if (proposals % hp.steps_per_temp == 0) temperature *= hp.alpha;
    ++state.iteration;
    if (hooks && hooks->on_population) hooks->on_population({incumbent.obj});
  }
  finish(res, ev, state);
  return res;
}

SearchResult differential_evolution(ObjectiveEvaluator& ev,
                                    const std::optional<ModelSpecification>& initial,
                                    const Hyperparameters& hp, std::uint64_t seed,
                                    SearchLog* log, const SearchHooks* hooks) {
  validate_hyperparameters(hp);
  if (hp.pop_size < 4)
    throw std::invalid_argument("differential evolution needs _pop_size >= 4");
  const DecisionSpace& space = ev.space();
  Rng rng(seed);
  SearchResult res;
  TerminationState state;

  std::vector<Member> pop =
      initial_population(ev, initial, hp.pop_size, rng, res.archive, log);
  sort_by_spea2(pop);
  notify_population(hooks, pop);

  while ((res.stop = check_termination(state, hp)) == StopReason::None) {
    const std::vector<Member> snapshot = pop;
    bool any_accept = false;
    for (int p = 0; p < hp.pop_size; ++p) {
      auto donors = pick_donors(rng, hp.pop_size, p);
      if (hooks && hooks->on_donors) hooks->on_donors(donors[0], donors[1], donors[2], p);

      std::vector<int> idx(static_cast<std::size_t>(space.n_slots()));
      for (int j = 0; j < space.n_slots(); ++j) {
        int mutant = de_index_update(
            snapshot[static_cast<std::size_t>(donors[0])].idx[static_cast<std::size_t>(j)],
            snapshot[static_cast<std::size_t>(donors[1])].idx[static_cast<std::size_t>(j)],
            snapshot[static_cast<std::size_t>(donors[2])].idx[static_cast<std::size_t>(j)],
            hp.ai, space.cardinality(j));
        bool crossover = rng.uniform01() < hp.cr;
        idx[static_cast<std::size_t>(j)] =
            crossover ? mutant
                      : snapshot[static_cast<std::size_t>(p)].idx[static_cast<std::size_t>(j)];
      }
      Member off = make_member(ev, space.decode(idx));

      bool accepted = no_worse(off.obj, snapshot[static_cast<std::size_t>(p)].obj);
      bool added = false;
      if (accepted) {
        added = res.archive.insert(
            {off.spec, off.enc, off.obj, off.ll, std::isfinite(off.ll)});
        pop[static_cast<std::size_t>(p)] = off;
        any_accept = true;
      }
      if (log) log->record(off.enc, off.ll, off.obj, accepted, res.archive.size(), added);

      if (state.elapsed() > hp.max_time) {
        res.stop = StopReason::TimeLimit;
        break;
      }
    }
    if (res.stop == StopReason::TimeLimit) break;
    if (any_accept) {
      sort_by_spea2(pop);
      state.accepted();
    } else {
      state.rejected();
    }
    notify_population(hooks, pop);
    ++state.iteration;
  }
  finish(res, ev, state);
  return res;
}

SearchResult run_algorithm(const std::string& name, ObjectiveEvaluator& obj,
                           const std::optional<ModelSpecification>& initial,
                           const Hyperparameters& hp, std::uint64_t seed,
                           SearchLog* log, const SearchHooks* hooks) {
  if (name == "hs") return harmony_search(obj, initial, hp, seed, log, hooks);
  if (name == "sa") return simulated_annealing(obj, initial, hp, seed, log, hooks);
  if (name == "de") return differential_evolution(obj, initial, hp, seed, log, hooks);
  throw std::invalid_argument("unknown algorithm '" + name + "'; use hs, sa or de");
}

}  // namespace countspec
