#include "countspec/estimator.hpp"

#include <map>

#include <Eigen/Cholesky>

namespace countspec {

double ObjectiveValues::by_name(const std::string& name) const {
  if (name == "BIC") return bic;
  if (name == "AIC") return aic;
  if (name == "HQIC") return hqic;
  if (name == "CAIC") return caic;
  if (name == "AICc") return aicc;
  if (name == "MSPE") return mspe;
  throw std::invalid_argument("unknown objective '" + name + "'");
}

std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  if (p < 0.1) return ".";
  return "";
}

ObjectiveValues information_criteria(double loglik, int k, Index n) {
  ObjectiveValues v;
  const double kk = static_cast<double>(k);
  const double nn = static_cast<double>(n);
  const double m2ll = -2.0 * loglik;
  v.bic = m2ll + kk * std::log(nn);
  v.aic = m2ll + 2.0 * kk;
  v.caic = m2ll + kk * (std::log(nn) + 1.0);
  v.hqic = m2ll + 2.0 * kk * std::log(std::log(nn));
  if (n > k + 1) {
    v.aicc = v.aic + 2.0 * kk * (kk + 1.0) / (nn - kk - 1.0);
    v.aicc_available = true;
  } else {
    v.aicc = std::numeric_limits<double>::infinity();
    v.aicc_available = false;
  }
  return v;
}

std::vector<std::optional<double>> standard_errors(const ObjFn& loglik,
                                                   const Vec& theta) {
  const Index k = theta.size();
  std::vector<std::optional<double>> out(static_cast<std::size_t>(k));
  Mat H = num_hessian(loglik, theta);
  if (!H.allFinite()) return out;
  Mat info = -0.5 * (H + H.transpose());  // observed information
  Eigen::LLT<Mat> llt(info);
  if (llt.info() != Eigen::Success) return out;  // not positive definite
  Mat cov = llt.solve(Mat::Identity(k, k));
  for (Index i = 0; i < k; ++i) {
    double v = cov(i, i);
    if (v > 0.0 && std::isfinite(v)) out[static_cast<std::size_t>(i)] = std::sqrt(v);
  }
  return out;
}

namespace {

CoefRow make_row(const ParamEntry& e, const ModelDesign& d, double raw) {
  CoefRow row;
  row.tau = e.tau;
  switch (e.kind) {
    case ParamEntry::Kind::FixedBeta:
      row.effect = e.name;
      row.estimate = raw;
      break;
    case ParamEntry::Kind::RandomMean: {
      const RandomDim& rd = d.rdims[static_cast<std::size_t>(e.dim)];
      if (rd.hetero_group >= 0) {
        bool first = d.hgroups[static_cast<std::size_t>(rd.hetero_group)].rm_dims.front() == e.dim;
        row.effect = (first ? "main: " : "") + e.name + ": hetro group " +
                     std::to_string(rd.hetero_group);
      } else {
        row.effect = e.name;
      }
      row.estimate = raw;
      break;
    }
    case ParamEntry::Kind::Spread: {
      const RandomDim& rd = d.rdims[static_cast<std::size_t>(e.dim)];
      if (rd.hetero_group >= 0)
        row.effect = e.name + ": hetro group " + std::to_string(rd.hetero_group) +
                     ":" + dist_display(rd.dist) + ":sd";
      else
        row.effect = e.name + " (Std. Dev.) " + dist_display(rd.dist);
      row.estimate = std::abs(raw);
      break;
    }
    case ParamEntry::Kind::Chol: {
      int dim = d.corr_dims[static_cast<std::size_t>(e.row)];
      const RandomDim& rd = d.rdims[static_cast<std::size_t>(dim)];
      if (e.row == e.col) {
        row.effect = e.name + " (Std. Dev.) " + dist_display(rd.dist);
        row.estimate = std::abs(raw);
      } else {
        row.effect = e.name + " (Chol.)";
        row.estimate = raw;
      }
      break;
    }
    case ParamEntry::Kind::Delta:
      row.effect = e.name + ": hetro group " + std::to_string(e.group);
      row.estimate = raw;
      break;
    case ParamEntry::Kind::LogAlpha:
      row.effect = e.name;
      row.estimate = std::exp(raw);
      break;
  }
  return row;
}

// The fixed-effects warm start: a plain Poisson fit over the intercept and
// every active factor, started at zeros with b0 = ln(mean(y)). Returns the
// coefficients keyed by effect name.
std::map<std::string, double> prefit_fixed_effects(const ModelSpecification& spec,
                                                   const Dataset& train,
                                                   const FitSettings& settings,
                                                   const LikelihoodOptions& lopts) {
  ModelSpecification fe = spec;
  fe.family = Family::Poisson;
  fe.hetero_groups.clear();
  for (auto& f : fe.factors)
    if (f.active()) f.level = FactorLevel::Fixed;
  ModelDesign d = build_design(fe, train, lopts);
  DrawMatrix none;
  ObjFn neg = [&](const Vec& th) { return -simulated_loglik(d, th, none); };
  Vec x0 = Vec::Zero(d.layout.size());
  double ybar = d.y.mean();
  x0[0] = std::log(std::max(ybar, 1e-8));
  OptimOptions oo;
  oo.max_iter = settings.max_iter;
  oo.grad_tol = settings.grad_tol;
  OptimResult r = minimize_lbfgsb(neg, x0, oo);
  const Vec& coefs = std::isfinite(r.f) ? r.x : x0;
  std::map<std::string, double> by_name;
  for (std::size_t i = 0; i < d.fixed_names.size(); ++i)
    by_name[d.fixed_names[i]] = coefs[static_cast<Index>(i)];
  return by_name;
}

}  // namespace

FitResult fit(const ModelSpecification& spec, const Dataset& train,
              const FitSettings& settings) {
  LikelihoodOptions lopts{settings.tn_bound, settings.clamp_bound};
  FitResult out;

  ModelDesign d = build_design(spec, train, lopts);
  out.k = d.layout.size();

  DrawMatrix draws;
  if (d.layout.n_rdims > 0)
    draws = make_draws(d.draw_unit_counts(), settings.n_draws, settings.generator,
                       settings.draw_seed);

  ObjFn loglik = [&](const Vec& th) { return simulated_loglik(d, th, draws); };
  ObjFn neg = [&](const Vec& th) {
    double v = loglik(th);
    return std::isfinite(v) ? -v : std::numeric_limits<double>::quiet_NaN();
  };

  Vec x0;
  if (settings.start) {
    x0 = *settings.start;
    if (x0.size() != d.layout.size()) {
      out.message = "start vector has wrong length";
      return out;
    }
  } else {
    auto pre = prefit_fixed_effects(spec, train, settings, lopts);
    ParamView pv;
    pv.bf.resize(d.layout.n_fixed);
    for (int i = 0; i < d.layout.n_fixed; ++i) {
      auto it = pre.find(d.fixed_names[static_cast<std::size_t>(i)]);
      pv.bf[i] = it == pre.end() ? 0.0 : it->second;
    }
    pv.br.resize(d.layout.n_rdims);
    for (int i = 0; i < d.layout.n_rdims; ++i) {
      auto it = pre.find(d.rdims[static_cast<std::size_t>(i)].name);
      pv.br[i] = it == pre.end() ? 0.0 : it->second;
    }
    pv.spread = Vec::Constant(d.layout.n_rdims, 0.1);
    if (d.layout.block_size > 0)
      pv.L = 0.1 * Mat::Identity(d.layout.block_size, d.layout.block_size);
    pv.delta.resize(d.hgroups.size());
    for (std::size_t g = 0; g < d.hgroups.size(); ++g)
      pv.delta[g] = Vec::Zero(static_cast<Index>(d.hgroups[g].z_names.size()));
    pv.alpha = 0.5;
    x0 = flatten(d, pv);
  }

  // Shrink the start toward zero until the likelihood is finite; a spec that
  // stays non-finite is reported as a failed estimation, never thrown.
  double f0 = neg(x0);
  for (int attempt = 0; attempt < 20 && !std::isfinite(f0); ++attempt) {
    x0 *= 0.5;
    f0 = neg(x0);
  }
  if (!std::isfinite(f0)) {
    out.message = "likelihood non-finite at start";
    out.theta = x0;
    return out;
  }

  OptimOptions oo;
  oo.max_iter = settings.max_iter;
  oo.grad_tol = settings.grad_tol;
  oo.lower = Vec::Constant(d.layout.size(), -50.0);
  oo.upper = Vec::Constant(d.layout.size(), 50.0);
  OptimResult r = minimize(settings.method_ll, neg, x0, oo);

  out.theta = r.x;
  out.loglik = -r.f;
  out.converged = r.converged && std::isfinite(r.f);
  out.message = r.reason;

  EvalDiag diag;
  simulated_loglik(d, out.theta, draws, &diag);
  out.clamp_count = diag.clamp_count;

  for (int i = 0; i < d.layout.size(); ++i)
    out.rows.push_back(make_row(d.layout.entries[static_cast<std::size_t>(i)], d,
                                out.theta[i]));

  if (settings.compute_se && out.converged)
    attach_standard_errors(out, d, loglik);
  return out;
}

void attach_standard_errors(FitResult& fit, const ModelDesign& design,
                            const ObjFn& loglik) {
  auto ses = standard_errors(loglik, fit.theta);
  fit.se_available = false;
  for (std::size_t i = 0; i < ses.size(); ++i) {
    CoefRow& row = fit.rows[i];
    if (!ses[i]) continue;
    double se = *ses[i];
    const ParamEntry& e = design.layout.entries[i];
    // Delta method for the reported dispersion (alpha = exp(raw)).
    if (e.kind == ParamEntry::Kind::LogAlpha) se *= row.estimate;
    row.std_err = se;
    if (se > 0) {
      double z = row.estimate / se;
      row.z = z;
      double p = std::erfc(std::abs(z) / std::sqrt(2.0));
      row.p = p;
      row.stars = significance_stars(p);
      fit.se_available = true;
    }
  }
}

double mspe(const FitResult& fit, const ModelSpecification& spec,
            const Dataset& test, const LikelihoodOptions& opts) {
  if (test.n_obs() == 0)
    throw std::invalid_argument("mspe needs a non-empty test set");
  ModelDesign d = build_design(spec, test, opts);
  Vec lambda = predict_mean(d, fit.theta);
  return (d.y - lambda).squaredNorm() / static_cast<double>(d.y.size());
}

ObjectiveValues evaluate_objectives(const FitResult& fit,
                                    const ModelSpecification& spec,
                                    const Dataset& train, const Dataset& test,
                                    const LikelihoodOptions& opts) {
  ObjectiveValues v;
  if (!fit.converged || !std::isfinite(fit.loglik)) return v;  // +inf sentinels
  v = information_criteria(fit.loglik, fit.k, train.n_obs());
  if (test.n_obs() > 0) {
    v.mspe = mspe(fit, spec, test, opts);
    v.mspe_available = std::isfinite(v.mspe);
  }
  return v;
}

}  // namespace countspec
