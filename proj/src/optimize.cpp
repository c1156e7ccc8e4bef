#include "countspec/optimize.hpp"

#include <deque>

namespace countspec {

namespace {

constexpr double kEps = 2.220446049250313e-16;

double fd_step1(double xi) { return std::cbrt(kEps) * std::max(1.0, std::abs(xi)); }
double fd_step2(double xi) {
  return std::pow(kEps, 0.25) * std::max(1.0, std::abs(xi));
}

Vec clip(const Vec& x, const OptimOptions& o) {
  Vec out = x;
  if (o.lower) out = out.cwiseMax(*o.lower);
  if (o.upper) out = out.cwiseMin(*o.upper);
  return out;
}

}  // namespace

Vec num_gradient(const ObjFn& fn, const Vec& x) {
  Vec g(x.size());
  Vec xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    double h = fd_step1(x[i]);
    xp[i] = x[i] + h;
    double fp = fn(xp);
    xp[i] = x[i] - h;
    double fm = fn(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Mat num_hessian(const ObjFn& fn, const Vec& x) {
  const Index n = x.size();
  Mat H(n, n);
  Vec xp = x;
  for (Index i = 0; i < n; ++i) {
    double hi = fd_step2(x[i]);
    for (Index j = 0; j < n; ++j) {
      if (i == j) {
        double f0 = fn(x);
        xp[i] = x[i] + hi;
        double fp = fn(xp);
        xp[i] = x[i] - hi;
        double fm = fn(xp);
        xp[i] = x[i];
        H(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
      } else {
        double hj = fd_step2(x[j]);
        xp[i] = x[i] + hi; xp[j] = x[j] + hj;
        double fpp = fn(xp);
        xp[j] = x[j] - hj;
        double fpm = fn(xp);
        xp[i] = x[i] - hi; xp[j] = x[j] + hj;
        double fmp = fn(xp);
        xp[j] = x[j] - hj;
        double fmm = fn(xp);
        xp[i] = x[i]; xp[j] = x[j];
        H(i, j) = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
      }
    }
  }
  return H;
}

namespace {

struct LineSearchOut {
  Vec x;
  double f;
  bool ok;
};

// Backtracking Armijo search along d, projecting onto the box each trial.
LineSearchOut line_search(const ObjFn& fn, const OptimOptions& o, const Vec& x,
                          double f, const Vec& g, const Vec& d, long long& evals) {
  const double c1 = 1e-4;
  double slope = g.dot(d);
  double step = 1.0;
  for (int t = 0; t < 40; ++t) {
    Vec xt = clip(x + step * d, o);
    double ft = fn(xt);
    ++evals;
    if (std::isfinite(ft) && ft <= f + c1 * step * std::min(slope, 0.0)) {
      if (ft < f || (xt - x).norm() > 0) return {xt, ft, ft < f};
    }
    step *= 0.5;
  }
  return {x, f, false};
}

Vec projected_gradient(const Vec& x, const Vec& g, const OptimOptions& o) {
  Vec pg = g;
  for (Index i = 0; i < x.size(); ++i) {
    if (o.lower && x[i] <= (*o.lower)[i] && g[i] > 0) pg[i] = 0;
    if (o.upper && x[i] >= (*o.upper)[i] && g[i] < 0) pg[i] = 0;
  }
  return pg;
}

}  // namespace

OptimResult minimize_lbfgsb(const ObjFn& fn, const Vec& x0, const OptimOptions& o) {
  OptimResult res;
  res.x = clip(x0, o);
  res.f = fn(res.x);
  res.evaluations = 1;
  if (!std::isfinite(res.f)) {
    res.reason = "non-finite objective at start";
    return res;
  }

  std::deque<Vec> s_hist, y_hist;
  Vec g = num_gradient(fn, res.x);
  res.evaluations += 2 * res.x.size();

  int stall = 0;
  for (int it = 0; it < o.max_iter; ++it) {
    res.iterations = it + 1;
    Vec pg = projected_gradient(res.x, g, o);
    if (pg.lpNorm<Eigen::Infinity>() <= o.grad_tol) {
      res.converged = true;
      res.reason = "gradient norm";
      return res;
    }

    // Two-loop recursion for the search direction.
    Vec q = -g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      double rho = 1.0 / y_hist[static_cast<std::size_t>(i)].dot(s_hist[static_cast<std::size_t>(i)]);
      alpha[static_cast<std::size_t>(i)] = rho * s_hist[static_cast<std::size_t>(i)].dot(q);
      q -= alpha[static_cast<std::size_t>(i)] * y_hist[static_cast<std::size_t>(i)];
    }
    if (!s_hist.empty()) {
      const Vec& s = s_hist.back();
      const Vec& y = y_hist.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      double rho = 1.0 / y_hist[i].dot(s_hist[i]);
      double beta = rho * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    if (q.dot(g) >= 0) q = -g;  // fall back to steepest descent

    auto ls = line_search(fn, o, res.x, res.f, g, q, res.evaluations);
    if (!ls.ok) {
      auto ls2 = line_search(fn, o, res.x, res.f, g, Vec(-g), res.evaluations);
      if (!ls2.ok) {
        res.converged = pg.lpNorm<Eigen::Infinity>() <= 1e3 * o.grad_tol;
        res.reason = "line search exhausted";
        return res;
      }
      ls = ls2;
    }

    Vec g_new = num_gradient(fn, ls.x);
    res.evaluations += 2 * res.x.size();
    Vec s = ls.x - res.x;
    Vec y = g_new - g;
    if (s.dot(y) > 1e-10 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      if (static_cast<int>(s_hist.size()) > o.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }

    double df = res.f - ls.f;
    res.x = ls.x;
    res.f = ls.f;
    g = g_new;

    if (df <= o.f_tol * (1.0 + std::abs(res.f))) {
      if (++stall >= 3) {
        res.converged = true;
        res.reason = "objective change";
        return res;
      }
    } else {
      stall = 0;
    }
  }
  res.reason = "iteration limit";
  return res;
}

OptimResult minimize_bfgs(const ObjFn& fn, const Vec& x0, const OptimOptions& o) {
  OptimResult res;
  res.x = clip(x0, o);
  res.f = fn(res.x);
  res.evaluations = 1;
  if (!std::isfinite(res.f)) {
    res.reason = "non-finite objective at start";
    return res;
  }
  const Index n = res.x.size();
  Mat Hinv = Mat::Identity(n, n);
  Vec g = num_gradient(fn, res.x);
  res.evaluations += 2 * n;
  int stall = 0;
  for (int it = 0; it < o.max_iter; ++it) {
    res.iterations = it + 1;
    Vec pg = projected_gradient(res.x, g, o);
    if (pg.lpNorm<Eigen::Infinity>() <= o.grad_tol) {
      res.converged = true;
      res.reason = "gradient norm";
      return res;
    }
    Vec d = -(Hinv * g);
    if (d.dot(g) >= 0) d = -g;
    auto ls = line_search(fn, o, res.x, res.f, g, d, res.evaluations);
    if (!ls.ok) {
      res.converged = pg.lpNorm<Eigen::Infinity>() <= 1e3 * o.grad_tol;
      res.reason = "line search exhausted";
      return res;
    }
    Vec g_new = num_gradient(fn, ls.x);
    res.evaluations += 2 * n;
    Vec s = ls.x - res.x;
    Vec y = g_new - g;
    double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      Mat I = Mat::Identity(n, n);
      Mat V = I - (y * s.transpose()) / sy;
      Hinv = V.transpose() * Hinv * V + (s * s.transpose()) / sy;
    }
    double df = res.f - ls.f;
    res.x = ls.x;
    res.f = ls.f;
    g = g_new;
    if (df <= o.f_tol * (1.0 + std::abs(res.f))) {
      if (++stall >= 3) {
        res.converged = true;
        res.reason = "objective change";
        return res;
      }
    } else {
      stall = 0;
    }
  }
  res.reason = "iteration limit";
  return res;
}

namespace {

OptimResult nelder_mead(const ObjFn& fn, const Vec& x0, const OptimOptions& o) {
  const Index n = x0.size();
  std::vector<Vec> simplex;
  std::vector<double> fvals;
  simplex.push_back(clip(x0, o));
  fvals.push_back(fn(simplex[0]));
  long long evals = 1;
  for (Index i = 0; i < n; ++i) {
    Vec xi = x0;
    xi[i] += 0.1 * std::max(1.0, std::abs(x0[i]));
    simplex.push_back(clip(xi, o));
    fvals.push_back(fn(simplex.back()));
    ++evals;
  }

  auto order = [&]() {
    std::vector<std::size_t> idx(simplex.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (std::isnan(fvals[a])) return false;
      if (std::isnan(fvals[b])) return true;
      return fvals[a] < fvals[b];
    });
    std::vector<Vec> s2;
    std::vector<double> f2;
    for (std::size_t i : idx) {
      s2.push_back(simplex[i]);
      f2.push_back(fvals[i]);
    }
    simplex.swap(s2);
    fvals.swap(f2);
  };

  OptimResult res;
  for (int it = 0; it < o.max_iter; ++it) {
    order();
    res.iterations = it + 1;
    double spread = std::abs(fvals.back() - fvals.front());
    if (spread <= 1e-10 * (1.0 + std::abs(fvals.front()))) break;

    Vec centroid = Vec::Zero(n);
    for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i];
    centroid /= static_cast<double>(n);

    auto eval = [&](const Vec& x) {
      ++evals;
      double f = fn(x);
      return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
    };

    Vec xr = clip(centroid + (centroid - simplex.back()), o);
    double fr = eval(xr);
    if (fr < fvals.front()) {
      Vec xe = clip(centroid + 2.0 * (centroid - simplex.back()), o);
      double fe = eval(xe);
      if (fe < fr) { simplex.back() = xe; fvals.back() = fe; }
      else { simplex.back() = xr; fvals.back() = fr; }
    } else if (fr < fvals[fvals.size() - 2]) {
      simplex.back() = xr;
      fvals.back() = fr;
    } else {
      Vec xc = clip(centroid + 0.5 * (simplex.back() - centroid), o);
      double fc = eval(xc);
      if (fc < fvals.back()) {
        simplex.back() = xc;
        fvals.back() = fc;
      } else {
        for (std::size_t i = 1; i < simplex.size(); ++i) {
          simplex[i] = clip(simplex[0] + 0.5 * (simplex[i] - simplex[0]), o);
          fvals[i] = eval(simplex[i]);
        }
      }
    }
  }
  order();
  res.x = simplex.front();
  res.f = fvals.front();
  res.evaluations = evals;
  res.converged = std::isfinite(res.f);
  res.reason = "simplex";
  return res;
}

}  // namespace

OptimResult minimize_neldermead_bfgs(const ObjFn& fn, const Vec& x0,
                                     const OptimOptions& o) {
  OptimOptions pre = o;
  pre.max_iter = std::max(50, o.max_iter / 2);
  OptimResult stage1 = nelder_mead(fn, x0, pre);
  if (!std::isfinite(stage1.f)) return stage1;
  OptimResult stage2 = minimize_lbfgsb(fn, stage1.x, o);
  stage2.evaluations += stage1.evaluations;
  if (!std::isfinite(stage2.f) || stage2.f > stage1.f) return stage1;
  return stage2;
}

OptimResult minimize(const std::string& method, const ObjFn& fn, const Vec& x0,
                     const OptimOptions& opts) {
  if (method == "L-BFGS-B") return minimize_lbfgsb(fn, x0, opts);
  if (method == "BFGS_2") return minimize_bfgs(fn, x0, opts);
  if (method == "Nelder-Mead-BFGS") return minimize_neldermead_bfgs(fn, x0, opts);
  throw std::invalid_argument("unknown method_ll '" + method +
                              "'; use 'L-BFGS-B', 'BFGS_2' or 'Nelder-Mead-BFGS'");
}

}  // namespace countspec
