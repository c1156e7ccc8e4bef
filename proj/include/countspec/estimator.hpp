#pragma once

#include <optional>

#include "countspec/likelihood.hpp"
#include "countspec/optimize.hpp"

namespace countspec {

struct FitSettings {
  std::string method_ll = "L-BFGS-B";
  int max_iter = 500;
  double grad_tol = 1e-5;
  int n_draws = 200;
  DrawGenerator generator = DrawGenerator::Halton;
  std::uint64_t draw_seed = 1;
  double tn_bound = 1.96;
  double clamp_bound = 30.0;
  bool compute_se = true;
  std::optional<Vec> start;  // overrides the warm start when set
};

struct CoefRow {
  std::string effect;
  std::string tau;
  double estimate = 0.0;
  std::optional<double> std_err;
  std::optional<double> z;
  std::optional<double> p;
  std::string stars;
};

struct FitResult {
  Vec theta;            // raw optimizer parameters
  double loglik = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int k = 0;            // flattened parameter count
  std::vector<CoefRow> rows;
  long long clamp_count = 0;
  bool se_available = false;
  std::string message;
};

struct ObjectiveValues {
  double bic = std::numeric_limits<double>::infinity();
  double aic = std::numeric_limits<double>::infinity();
  double hqic = std::numeric_limits<double>::infinity();
  double caic = std::numeric_limits<double>::infinity();
  double aicc = std::numeric_limits<double>::infinity();
  bool aicc_available = false;
  double mspe = std::numeric_limits<double>::infinity();
  bool mspe_available = false;

  double by_name(const std::string& name) const;
};

/// Significance stars: p < .001 "***", < .01 "**", < .05 "*", < .1 ".".
std::string significance_stars(double p);

/// Maximize the (simulated) log-likelihood of a specification. Estimation
/// failures are values, not exceptions: a non-finite likelihood or an
/// unusable start yields converged=false so the outer search can continue.
FitResult fit(const ModelSpecification& spec, const Dataset& train,
              const FitSettings& settings);

/// BIC / AIC / AICc / CAIC / HQIC from one (loglik, k, n) triple. AICc is
/// unavailable when n <= k + 1.
ObjectiveValues information_criteria(double loglik, int k, Index n);

/// Standard errors from the central finite-difference Hessian of `loglik`
/// at theta. A non-positive-definite Hessian marks them all unavailable.
std::vector<std::optional<double>> standard_errors(const ObjFn& loglik,
                                                   const Vec& theta);

/// Fill the std err / z / p / stars columns of a fit in place.
void attach_standard_errors(FitResult& fit, const ModelDesign& design,
                            const ObjFn& loglik);

/// Mean squared prediction error on a held-out set, draw-free (random
/// parameters at their estimated means).
double mspe(const FitResult& fit, const ModelSpecification& spec,
            const Dataset& test, const LikelihoodOptions& opts = {});

/// Criteria plus MSPE for a fitted specification; everything is +inf when
/// the fit did not converge.
ObjectiveValues evaluate_objectives(const FitResult& fit,
                                    const ModelSpecification& spec,
                                    const Dataset& train, const Dataset& test,
                                    const LikelihoodOptions& opts = {});

}  // namespace countspec
