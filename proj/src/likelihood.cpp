#include "countspec/likelihood.hpp"

#include <numeric>

namespace countspec {

double marginal_transform(double u, Dist code, double mean, double spread,
                          double tn_bound) {
  if (!(u > 0.0 && u < 1.0))
    throw std::invalid_argument("marginal_transform: u must lie in (0,1)");
  const double s = std::abs(spread);
  switch (code) {
    case Dist::Normal:
      return mean + s * norm_ppf(u);
    case Dist::Uniform:
      return mean + s * (2.0 * u - 1.0);
    case Dist::Triangular: {
      double t = u < 0.5 ? std::sqrt(2.0 * u) - 1.0 : 1.0 - std::sqrt(2.0 * (1.0 - u));
      return mean + s * t;
    }
    case Dist::LogNormal:
      return std::exp(mean + s * norm_ppf(u));
    case Dist::TruncNormal: {
      const double lo = norm_cdf(-tn_bound);
      const double hi = norm_cdf(tn_bound);
      return mean + s * norm_ppf(lo + u * (hi - lo));
    }
  }
  throw std::logic_error("unreachable");
}

double poisson_logpmf(long long y, double lambda) {
  if (y < 0) throw std::invalid_argument("poisson_logpmf: y must be >= 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("poisson_logpmf: lambda must be > 0");
  return -lambda + static_cast<double>(y) * std::log(lambda) -
         std::lgamma(static_cast<double>(y) + 1.0);
}

double negbin_logpmf(long long y, double lambda, double alpha) {
  if (y < 0) throw std::invalid_argument("negbin_logpmf: y must be >= 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("negbin_logpmf: lambda must be > 0");
  if (!(alpha > 0.0)) throw std::invalid_argument("negbin_logpmf: alpha must be > 0");
  const double r = 1.0 / alpha;
  // lgamma(y+r) - lgamma(r) as an exact finite sum over the integer count;
  // stable even when r is huge (the Poisson limit).
  double lratio = 0.0;
  for (long long j = 0; j < y; ++j) lratio += std::log(r + static_cast<double>(j));
  return lratio - std::lgamma(static_cast<double>(y) + 1.0) + r * std::log(r) -
         (r + static_cast<double>(y)) * std::log(r + lambda) +
         static_cast<double>(y) * std::log(lambda);
}

double conditional_mean(const Eigen::Ref<const Vec>& x,
                        const Eigen::Ref<const Vec>& beta, double offset,
                        double clamp_bound) {
  double eta = x.dot(beta) + offset;
  if (eta > clamp_bound) eta = clamp_bound;
  if (eta < -clamp_bound) eta = -clamp_bound;
  return std::exp(eta);
}

std::vector<int> ModelDesign::draw_unit_counts() const {
  std::vector<int> out;
  out.reserve(rdims.size());
  for (const auto& rd : rdims) out.push_back(rd.unit_count);
  return out;
}

namespace {

Vec transformed_column(const Dataset& ds, int col, Transform t) {
  return apply_transformation(ds.columns[static_cast<std::size_t>(col)].values, t);
}

}  // namespace

ModelDesign build_design(const ModelSpecification& spec, const Dataset& ds,
                         const LikelihoodOptions& opts) {
  ModelDesign d;
  d.family = spec.family;
  d.n = ds.n_obs();
  d.tn_bound = opts.tn_bound;
  d.clamp_bound = opts.clamp_bound;

  const std::vector<int> cand = ds.candidate_columns();
  if (spec.factors.size() != cand.size())
    throw std::invalid_argument("specification and dataset disagree on factor count");

  // Level-5 mean covariates carry no coefficient column of their own.
  std::vector<char> is_cov(spec.factors.size(), 0);
  for (const auto& g : spec.hetero_groups)
    for (int m : g.mean_covariates) is_cov[static_cast<std::size_t>(m)] = 1;

  // Fixed block: intercept plus level-1 factors.
  std::vector<int> fixed_factors;
  std::vector<int> random_factors;
  for (std::size_t k = 0; k < spec.factors.size(); ++k) {
    const FactorDecision& f = spec.factors[k];
    if (f.level == FactorLevel::Fixed) fixed_factors.push_back(static_cast<int>(k));
    if (f.random() && !is_cov[k]) random_factors.push_back(static_cast<int>(k));
  }

  d.Xf.resize(d.n, 1 + static_cast<Index>(fixed_factors.size()));
  d.Xf.col(0).setOnes();
  d.fixed_names = {"const"};
  d.fixed_taus = {"no"};
  for (std::size_t i = 0; i < fixed_factors.size(); ++i) {
    int k = fixed_factors[i];
    const FactorDecision& f = spec.factors[static_cast<std::size_t>(k)];
    d.Xf.col(1 + static_cast<Index>(i)) =
        transformed_column(ds, cand[static_cast<std::size_t>(k)], f.transform);
    d.fixed_names.push_back(ds.columns[static_cast<std::size_t>(cand[static_cast<std::size_t>(k)])].name);
    d.fixed_taus.push_back(to_string(f.transform));
  }

  // Random dimensions in factor order.
  d.Xr.resize(d.n, static_cast<Index>(random_factors.size()));
  for (std::size_t i = 0; i < random_factors.size(); ++i) {
    int k = random_factors[i];
    const FactorDecision& f = spec.factors[static_cast<std::size_t>(k)];
    d.Xr.col(static_cast<Index>(i)) =
        transformed_column(ds, cand[static_cast<std::size_t>(k)], f.transform);

    RandomDim rd;
    rd.factor = k;
    rd.name = ds.columns[static_cast<std::size_t>(cand[static_cast<std::size_t>(k)])].name;
    rd.dist = f.dist;
    rd.level = f.level;
    if (f.level == FactorLevel::Grouped) {
      if (!ds.has_group())
        throw std::invalid_argument("grouped random parameter without a group column");
      rd.unit = DrawUnit::Group;
      rd.unit_of_obs = ds.group_ids;
      rd.unit_count = ds.n_groups();
    } else if (ds.has_panel()) {
      rd.unit = DrawUnit::Panel;
      rd.unit_of_obs = ds.panel_ids;
      rd.unit_count = ds.n_panels();
    } else {
      rd.unit = DrawUnit::Observation;
      rd.unit_of_obs.resize(static_cast<std::size_t>(d.n));
      std::iota(rd.unit_of_obs.begin(), rd.unit_of_obs.end(), 0);
      rd.unit_count = static_cast<int>(d.n);
    }
    d.rdims.push_back(std::move(rd));
  }

  for (std::size_t i = 0; i < d.rdims.size(); ++i) {
    if (d.rdims[i].level == FactorLevel::Correlated) {
      d.rdims[i].corr_pos = static_cast<int>(d.corr_dims.size());
      d.corr_dims.push_back(static_cast<int>(i));
    }
  }

  // Hetero groups against rdim indexing.
  for (std::size_t gi = 0; gi < spec.hetero_groups.size(); ++gi) {
    const HeteroGroup& g = spec.hetero_groups[gi];
    ModelDesign::HGroup hg;
    hg.dist = g.dist;
    for (int m : g.random_members) {
      for (std::size_t i = 0; i < d.rdims.size(); ++i)
        if (d.rdims[i].factor == m) {
          d.rdims[i].hetero_group = static_cast<int>(gi);
          hg.rm_dims.push_back(static_cast<int>(i));
        }
    }
    hg.Z.resize(d.n, static_cast<Index>(g.mean_covariates.size()));
    for (std::size_t zi = 0; zi < g.mean_covariates.size(); ++zi) {
      int k = g.mean_covariates[zi];
      const FactorDecision& f = spec.factors[static_cast<std::size_t>(k)];
      hg.Z.col(static_cast<Index>(zi)) =
          transformed_column(ds, cand[static_cast<std::size_t>(k)], f.transform);
      hg.z_names.push_back(
          ds.columns[static_cast<std::size_t>(cand[static_cast<std::size_t>(k)])].name);
      hg.z_taus.push_back(to_string(f.transform));
    }
    d.hgroups.push_back(std::move(hg));
  }

  d.offset = ds.offset_or_zero();
  d.y = ds.y();
  d.lgamma_y1.resize(static_cast<std::size_t>(d.n));
  for (Index i = 0; i < d.n; ++i)
    d.lgamma_y1[static_cast<std::size_t>(i)] = std::lgamma(d.y[i] + 1.0);

  if (ds.has_panel()) {
    d.panel_of_obs = ds.panel_ids;
    d.n_panels = ds.n_panels();
  } else {
    d.panel_of_obs.resize(static_cast<std::size_t>(d.n));
    std::iota(d.panel_of_obs.begin(), d.panel_of_obs.end(), 0);
    d.n_panels = static_cast<int>(d.n);
  }

  // Parameter layout.
  ParamLayout& lay = d.layout;
  lay.n_fixed = static_cast<int>(d.Xf.cols());
  lay.n_rdims = static_cast<int>(d.rdims.size());
  for (int i = 0; i < lay.n_fixed; ++i)
    lay.entries.push_back({ParamEntry::Kind::FixedBeta,
                           d.fixed_names[static_cast<std::size_t>(i)],
                           d.fixed_taus[static_cast<std::size_t>(i)],
                           -1, -1, -1, -1, -1});
  for (int i = 0; i < lay.n_rdims; ++i) {
    const RandomDim& rd = d.rdims[static_cast<std::size_t>(i)];
    lay.entries.push_back({ParamEntry::Kind::RandomMean, rd.name,
                           to_string(spec.factors[static_cast<std::size_t>(rd.factor)].transform),
                           i, -1, -1, rd.hetero_group, -1});
  }
  lay.spread_offset.assign(static_cast<std::size_t>(lay.n_rdims), -1);
  for (int i = 0; i < lay.n_rdims; ++i) {
    const RandomDim& rd = d.rdims[static_cast<std::size_t>(i)];
    if (rd.corr_pos >= 0) continue;
    lay.spread_offset[static_cast<std::size_t>(i)] = lay.size();
    lay.entries.push_back({ParamEntry::Kind::Spread, rd.name, "", i, -1, -1,
                           rd.hetero_group, -1});
  }
  lay.block_size = static_cast<int>(d.corr_dims.size());
  if (lay.block_size > 0) {
    lay.chol_offset = lay.size();
    for (int i = 0; i < lay.block_size; ++i) {
      for (int j = 0; j <= i; ++j) {
        const std::string ni = d.rdims[static_cast<std::size_t>(d.corr_dims[static_cast<std::size_t>(i)])].name;
        const std::string nj = d.rdims[static_cast<std::size_t>(d.corr_dims[static_cast<std::size_t>(j)])].name;
        lay.entries.push_back({ParamEntry::Kind::Chol,
                               i == j ? ni : ni + "." + nj, "", -1, i, j, -1, -1});
      }
    }
  }
  lay.delta_offset.resize(d.hgroups.size());
  for (std::size_t g = 0; g < d.hgroups.size(); ++g) {
    for (std::size_t z = 0; z < d.hgroups[g].z_names.size(); ++z) {
      lay.delta_offset[g].push_back(lay.size());
      lay.entries.push_back({ParamEntry::Kind::Delta, d.hgroups[g].z_names[z],
                             d.hgroups[g].z_taus[z], -1, -1, -1,
                             static_cast<int>(g), static_cast<int>(z)});
    }
  }
  if (d.family == Family::NegBin) {
    lay.alpha_offset = lay.size();
    lay.entries.push_back({ParamEntry::Kind::LogAlpha, "alpha (dispersion)", "",
                           -1, -1, -1, -1, -1});
  }
  return d;
}

ParamView unflatten(const ModelDesign& d, const Vec& theta) {
  const ParamLayout& lay = d.layout;
  if (theta.size() != lay.size())
    throw std::invalid_argument("parameter vector has wrong length");
  ParamView v;
  v.bf = theta.head(lay.n_fixed);
  v.br = theta.segment(lay.n_fixed, lay.n_rdims);
  v.spread = Vec::Zero(lay.n_rdims);
  for (int i = 0; i < lay.n_rdims; ++i) {
    int off = lay.spread_offset[static_cast<std::size_t>(i)];
    if (off >= 0) v.spread[i] = std::abs(theta[off]);
  }
  if (lay.block_size > 0) {
    v.L = Mat::Zero(lay.block_size, lay.block_size);
    int p = lay.chol_offset;
    for (int i = 0; i < lay.block_size; ++i)
      for (int j = 0; j <= i; ++j, ++p)
        v.L(i, j) = (i == j) ? std::abs(theta[p]) : theta[p];
  }
  v.delta.resize(d.hgroups.size());
  for (std::size_t g = 0; g < d.hgroups.size(); ++g) {
    v.delta[g].resize(static_cast<Index>(lay.delta_offset[g].size()));
    for (std::size_t z = 0; z < lay.delta_offset[g].size(); ++z)
      v.delta[g][static_cast<Index>(z)] = theta[lay.delta_offset[g][z]];
  }
  if (lay.alpha_offset >= 0) v.alpha = std::exp(theta[lay.alpha_offset]);
  return v;
}

Vec flatten(const ModelDesign& d, const ParamView& view) {
  const ParamLayout& lay = d.layout;
  Vec theta = Vec::Zero(lay.size());
  theta.head(lay.n_fixed) = view.bf;
  theta.segment(lay.n_fixed, lay.n_rdims) = view.br;
  for (int i = 0; i < lay.n_rdims; ++i) {
    int off = lay.spread_offset[static_cast<std::size_t>(i)];
    if (off >= 0) theta[off] = view.spread[i];
  }
  if (lay.block_size > 0) {
    int p = lay.chol_offset;
    for (int i = 0; i < lay.block_size; ++i)
      for (int j = 0; j <= i; ++j, ++p) theta[p] = view.L(i, j);
  }
  for (std::size_t g = 0; g < lay.delta_offset.size(); ++g)
    for (std::size_t z = 0; z < lay.delta_offset[g].size(); ++z)
      theta[lay.delta_offset[g][z]] = view.delta[g][static_cast<Index>(z)];
  if (lay.alpha_offset >= 0) theta[lay.alpha_offset] = std::log(view.alpha);
  return theta;
}

namespace {

// Random-coefficient means per observation: the base mean plus the hetero
// shift Z * delta for level-5 members.
Mat mean_matrix(const ModelDesign& d, const ParamView& pv) {
  Mat means(d.n, d.layout.n_rdims);
  for (int i = 0; i < d.layout.n_rdims; ++i) means.col(i).setConstant(pv.br[i]);
  for (std::size_t g = 0; g < d.hgroups.size(); ++g) {
    if (d.hgroups[g].Z.cols() == 0) continue;
    Vec shift = d.hgroups[g].Z * pv.delta[g];
    for (int dim : d.hgroups[g].rm_dims) means.col(dim) += shift;
  }
  return means;
}

Mat beta_for_draw(const ModelDesign& d, const ParamView& pv, const Mat& means,
                  const DrawMatrix& draws, int r) {
  const int D = d.layout.n_rdims;
  Mat beta(d.n, D);
  for (int dim = 0; dim < D; ++dim) {
    const RandomDim& rd = d.rdims[static_cast<std::size_t>(dim)];
    if (rd.corr_pos >= 0) continue;  // handled as a block below
    for (Index i = 0; i < d.n; ++i) {
      double u = draws.u(dim, rd.unit_of_obs[static_cast<std::size_t>(i)], r);
      beta(i, dim) = marginal_transform(u, rd.dist, means(i, dim), pv.spread[dim],
                                        d.tn_bound);
    }
  }
  const int B = d.layout.block_size;
  if (B > 0) {
    Vec g(B);
    for (Index i = 0; i < d.n; ++i) {
      for (int p = 0; p < B; ++p) {
        int dim = d.corr_dims[static_cast<std::size_t>(p)];
        const RandomDim& rd = d.rdims[static_cast<std::size_t>(dim)];
        double u = draws.u(dim, rd.unit_of_obs[static_cast<std::size_t>(i)], r);
        g[p] = marginal_transform(u, rd.dist, 0.0, 1.0, d.tn_bound);
      }
      Vec mixed = pv.L * g;
      for (int p = 0; p < B; ++p) {
        int dim = d.corr_dims[static_cast<std::size_t>(p)];
        beta(i, dim) = means(i, dim) + mixed[p];
      }
    }
  }
  return beta;
}

inline double clamp_eta(double eta, double bound, EvalDiag* diag) {
  if (eta > bound || eta < -bound) {
    if (diag) ++diag->clamp_count;
    return eta > bound ? bound : -bound;
  }
  return eta;
}

}  // namespace

Mat build_beta(const ModelDesign& d, const Vec& theta, const DrawMatrix& draws,
               int r) {
  ParamView pv = unflatten(d, theta);
  Mat means = mean_matrix(d, pv);
  return beta_for_draw(d, pv, means, draws, r);
}

double simulated_loglik(const ModelDesign& d, const Vec& theta,
                        const DrawMatrix& draws, EvalDiag* diag) {
  ParamView pv = unflatten(d, theta);
  const Vec eta_fixed = d.Xf * pv.bf + d.offset;

  // Draw-independent NB pieces: sum_{j<y} log(r+j) and r log r.
  const bool nb = d.family == Family::NegBin;
  const double r_nb = nb ? 1.0 / pv.alpha : 0.0;
  const double rlogr = nb ? r_nb * std::log(r_nb) : 0.0;
  Vec nb_const;
  if (nb) {
    nb_const.resize(d.n);
    for (Index i = 0; i < d.n; ++i) {
      double acc = 0.0;
      const auto yi = static_cast<long long>(d.y[i]);
      for (long long j = 0; j < yi; ++j) acc += std::log(r_nb + static_cast<double>(j));
      nb_const[i] = acc - d.lgamma_y1[static_cast<std::size_t>(i)];
    }
  }

  auto obs_loglik = [&](Index i, double eta) {
    double etac = clamp_eta(eta, d.clamp_bound, diag);
    double lambda = std::exp(etac);
    if (nb) {
      return nb_const[i] + rlogr - (r_nb + d.y[i]) * std::log(r_nb + lambda) +
             d.y[i] * etac;
    }
    return -lambda + d.y[i] * etac - d.lgamma_y1[static_cast<std::size_t>(i)];
  };

  if (d.layout.n_rdims == 0) {
    double total = 0.0;
    for (Index i = 0; i < d.n; ++i) total += obs_loglik(i, eta_fixed[i]);
    return total;
  }

  if (draws.n_dims() != d.layout.n_rdims || draws.n_draws < 1)
    throw std::invalid_argument("draw matrix does not cover the random dimensions");

  const int R = draws.n_draws;
  Mat means = mean_matrix(d, pv);
  Mat panel_ll = Mat::Zero(d.n_panels, R);
  for (int r = 0; r < R; ++r) {
    Mat beta = beta_for_draw(d, pv, means, draws, r);
    for (Index i = 0; i < d.n; ++i) {
      double eta = eta_fixed[i] + d.Xr.row(i).dot(beta.row(i));
      panel_ll(d.panel_of_obs[static_cast<std::size_t>(i)], r) += obs_loglik(i, eta);
    }
  }

  const double logR = std::log(static_cast<double>(R));
  double total = 0.0;
  for (int p = 0; p < d.n_panels; ++p)
    total += log_sum_exp(panel_ll.row(p)) - logR;
  return total;
}

Vec predict_mean(const ModelDesign& d, const Vec& theta) {
  ParamView pv = unflatten(d, theta);
  Vec eta = d.Xf * pv.bf + d.offset;
  if (d.layout.n_rdims > 0) {
    Mat means = mean_matrix(d, pv);
    for (int dim = 0; dim < d.layout.n_rdims; ++dim) {
      const RandomDim& rd = d.rdims[static_cast<std::size_t>(dim)];
      double s = pv.spread[dim];
      if (rd.corr_pos >= 0) s = pv.L.row(rd.corr_pos).norm();
      for (Index i = 0; i < d.n; ++i) {
        double coef = means(i, dim);
        if (rd.dist == Dist::LogNormal) coef = std::exp(coef + 0.5 * s * s);
        eta[i] += coef * d.Xr(i, dim);
      }
    }
  }
  Vec lambda(d.n);
  for (Index i = 0; i < d.n; ++i)
    lambda[i] = std::exp(clamp_eta(eta[i], d.clamp_bound, nullptr));
  return lambda;
}

}  // namespace countspec
