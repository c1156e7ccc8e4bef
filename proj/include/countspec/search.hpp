#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <ostream>
#include <unordered_map>

#include "countspec/estimator.hpp"
#include "countspec/pareto.hpp"

namespace countspec {

struct Hyperparameters {
  // harmony search
  int hms = 20;
  double hmcr = 0.4;
  double par = 0.4;
  int mpai = 1;
  /// Pitch-adjust when U(0,1) >= PAR, the literal rule; false flips it to
  /// the conventional <= form.
  bool pitch_literal_ge = true;

  // differential evolution
  int ai = 1;
  double cr = 0.2;
  int pop_size = 20;

  // simulated annealing
  double alpha = 0.95;
  int steps_per_temp = 2;
  double intl_acpt = 0.5;
  int num_intl_slns = 25;
  double sa_crossover = 0.3;  // accepted for sweep grids; the annealer is crossover-free

  // global
  long max_iter = 1000;
  double max_time = 3600.0;  // seconds
  int no_improve_cap = 50;
};

void validate_hyperparameters(const Hyperparameters& hp);

enum class StopReason { None, TimeLimit, MaxIterations, NoImprovement };
std::string to_string(StopReason r);

struct TerminationState {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  long iteration = 0;
  long iterations_since_acceptance = 0;
  std::optional<double> forced_elapsed;  // tests pin the clock here

  double elapsed() const;
  void accepted() { iterations_since_acceptance = 0; }
  void rejected() { ++iterations_since_acceptance; }
};

StopReason check_termination(const TerminationState& state, const Hyperparameters& hp);

/// One line per evaluated model, plus the running per-objective best. File
/// output is verbosity-independent; the console obeys verbose 0/1/2.
class SearchLog {
 public:
  SearchLog(std::ostream* file, std::ostream* console, int verbose)
      : file_(file), console_(console), verbose_(verbose) {}

  void record(const std::string& encoding, double loglik, const ObjVec& obj,
              bool accepted, std::size_t archive_size, bool pareto_added);

  const std::vector<ObjVec>& best_history() const { return best_history_; }
  const std::vector<ObjVec>& all_objectives() const { return all_objectives_; }
  long long lines() const { return line_; }

 private:
  std::ostream* file_;
  std::ostream* console_;
  int verbose_;
  long long line_ = 0;
  ObjVec best_so_far_;
  std::vector<ObjVec> best_history_;
  std::vector<ObjVec> all_objectives_;
};

struct EvalOutcome {
  ObjVec objectives;
  double loglik = -std::numeric_limits<double>::infinity();
  bool converged = false;
  bool cached = false;
  ObjectiveValues full;
};

/// Fits specifications and maps them onto the active objective vector.
/// Results are memoized by canonical encoding; every submission is checked
/// against the constraints and violations are counted (a correct search
/// never produces one). The same draw seed serves every specification in a
/// run so objective differences reflect the specification alone.
class ObjectiveEvaluator {
 public:
  ObjectiveEvaluator(DecisionSpace space, Dataset train, Dataset test,
                     FitSettings settings, std::vector<std::string> objectives);

  EvalOutcome evaluate(const ModelSpecification& spec);
  FitResult fit_with_se(const ModelSpecification& spec) const;

  const DecisionSpace& space() const { return space_; }
  const Dataset& train() const { return train_; }
  const Dataset& test() const { return test_; }
  const std::vector<std::string>& objective_names() const { return objectives_; }
  int n_objectives() const { return static_cast<int>(objectives_.size()); }

  long long evaluations() const { return n_eval_; }
  long long cache_hits() const { return n_cache_hits_; }
  long long constraint_violations() const { return n_violations_; }

 private:
  DecisionSpace space_;
  Dataset train_;
  Dataset test_;
  FitSettings settings_;
  std::vector<std::string> objectives_;
  std::unordered_map<std::string, EvalOutcome> cache_;
  long long n_eval_ = 0;
  long long n_cache_hits_ = 0;
  long long n_violations_ = 0;
};

struct SearchHooks {
  std::function<void(const std::vector<ObjVec>&)> on_population;
  std::function<void(int r1, int r2, int r3, int p)> on_donors;
};

struct SearchResult {
  ParetoArchive archive;
  StopReason stop = StopReason::None;
  long iterations = 0;
  double elapsed_seconds = 0.0;
  long long evaluations = 0;
  long long cache_hits = 0;
  long long constraint_violations = 0;
};

SearchResult harmony_search(ObjectiveEvaluator& obj,
                            const std::optional<ModelSpecification>& initial,
                            const Hyperparameters& hp, std::uint64_t seed,
                            SearchLog* log = nullptr,
                            const SearchHooks* hooks = nullptr);

SearchResult simulated_annealing(ObjectiveEvaluator& obj,
                                 const std::optional<ModelSpecification>& initial,
                                 const Hyperparameters& hp, std::uint64_t seed,
                                 SearchLog* log = nullptr,
                                 const SearchHooks* hooks = nullptr);

SearchResult differential_evolution(ObjectiveEvaluator& obj,
                                    const std::optional<ModelSpecification>& initial,
                                    const Hyperparameters& hp, std::uint64_t seed,
                                    SearchLog* log = nullptr,
                                    const SearchHooks* hooks = nullptr);

/// Dispatch on "hs" / "sa" / "de".
SearchResult run_algorithm(const std::string& name, ObjectiveEvaluator& obj,
                           const std::optional<ModelSpecification>& initial,
                           const Hyperparameters& hp, std::uint64_t seed,
                           SearchLog* log = nullptr,
                           const SearchHooks* hooks = nullptr);

/// The three mutually distinct donor indices for one DE mutation.
std::array<int, 3> pick_donors(Rng& rng, int pop_size, int p);

}  // namespace countspec
