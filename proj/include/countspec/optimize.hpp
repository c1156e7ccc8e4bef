#pragma once

#include <functional>
#include <optional>
#include <string>

#include "countspec/common.hpp"

namespace countspec {

using ObjFn = std::function<double(const Vec&)>;

struct OptimOptions {
  int max_iter = 500;
  double grad_tol = 1e-5;   // infinity norm of the (projected) gradient
  double f_tol = 1e-12;     // relative objective change
  int memory = 8;           // L-BFGS history
  std::optional<Vec> lower;
  std::optional<Vec> upper;
};

struct OptimResult {
  Vec x;
  double f = std::numeric_limits<double>::infinity();
  int iterations = 0;
  long long evaluations = 0;
  bool converged = false;
  std::string reason;
};

/// Central-difference gradient, step eps^(1/3) * max(1, |x_i|).
Vec num_gradient(const ObjFn& fn, const Vec& x);

/// Central second-difference Hessian. Every entry is computed independently
/// (no symmetrization), so H ~ H^T only holds to finite-difference accuracy.
Mat num_hessian(const ObjFn& fn, const Vec& x);

/// Limited-memory BFGS with optional box bounds (projection + backtracking
/// line search). Minimizes fn.
OptimResult minimize_lbfgsb(const ObjFn& fn, const Vec& x0, const OptimOptions& opts);

/// Full-matrix BFGS; suits the small parameter vectors seen here.
OptimResult minimize_bfgs(const ObjFn& fn, const Vec& x0, const OptimOptions& opts);

/// Nelder-Mead simplex followed by an L-BFGS polish.
OptimResult minimize_neldermead_bfgs(const ObjFn& fn, const Vec& x0,
                                     const OptimOptions& opts);

/// Dispatch on the method name: "L-BFGS-B", "BFGS_2" or "Nelder-Mead-BFGS".
OptimResult minimize(const std::string& method, const ObjFn& fn, const Vec& x0,
                     const OptimOptions& opts);

}  // namespace countspec
