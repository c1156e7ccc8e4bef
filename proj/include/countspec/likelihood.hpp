#pragma once

#include <string>
#include <vector>

#include "countspec/dataset.hpp"
#include "countspec/draws.hpp"
#include "countspec/spec_space.hpp"

namespace countspec {

/// Map a standard uniform draw to the named law with location `mean` and
/// scale |spread|. Triangular/uniform/normal are location-scale; ln_n
/// exponentiates a normal; tn_n truncates the normal at +-tn_bound standard
/// deviations.
double marginal_transform(double u, Dist code, double mean, double spread,
                          double tn_bound = 1.96);

/// log P(y | lambda) for a Poisson count.
double poisson_logpmf(long long y, double lambda);

/// NB-2 log pmf with dispersion alpha: r = 1/alpha, p = r / (r + lambda).
double negbin_logpmf(long long y, double lambda, double alpha);

/// exp(clamp(x . beta + offset)); the clamp keeps metaheuristic excursions
/// from overflowing (events are counted by the caller via EvalDiag).
double conditional_mean(const Eigen::Ref<const Vec>& x,
                        const Eigen::Ref<const Vec>& beta, double offset,
                        double clamp_bound = 30.0);

struct ParamEntry {
  enum class Kind { FixedBeta, RandomMean, Spread, Chol, Delta, LogAlpha };
  Kind kind;
  std::string name;   // Effect label for report rows
  std::string tau;    // transformation label, empty for derived rows
  int dim = -1;       // random-dimension index (RandomMean / Spread)
  int row = -1;       // Cholesky block coordinates
  int col = -1;
  int group = -1;     // hetero group (Delta / hetero means)
  int cov = -1;
};

/// Deterministic flattening order: fixed betas (intercept first), random
/// means, spreads, Cholesky rows of the correlated block, hetero-in-means
/// deltas, then log alpha for NB. Spreads and Cholesky diagonals are stored
/// unconstrained and applied as |value|; the dispersion is stored as log.
struct ParamLayout {
  std::vector<ParamEntry> entries;
  int n_fixed = 0;
  int n_rdims = 0;
  std::vector<int> spread_offset;  // per rdim; -1 inside the correlated block
  int chol_offset = -1;
  int block_size = 0;
  std::vector<std::vector<int>> delta_offset;  // per group, per covariate
  int alpha_offset = -1;

  int size() const { return static_cast<int>(entries.size()); }
};

struct RandomDim {
  int factor = -1;
  std::string name;
  Dist dist = Dist::Normal;
  FactorLevel level = FactorLevel::Random;
  int hetero_group = -1;        // set for level-5 random members
  int corr_pos = -1;            // position in the Cholesky block, -1 if none
  DrawUnit unit = DrawUnit::Observation;
  std::vector<int> unit_of_obs; // obs -> draw row
  int unit_count = 0;
};

/// A specification compiled against a dataset: transformed design columns,
/// random-dimension bookkeeping and the parameter layout. Read-only after
/// construction.
struct ModelDesign {
  Family family = Family::Poisson;
  Index n = 0;

  Mat Xf;  // n x n_fixed, column 0 is the intercept
  std::vector<std::string> fixed_names;
  std::vector<std::string> fixed_taus;

  Mat Xr;  // n x n_rdims
  std::vector<RandomDim> rdims;
  std::vector<int> corr_dims;  // rdim indices forming the Cholesky block

  struct HGroup {
    Dist dist;
    std::vector<int> rm_dims;  // rdim indices
    Mat Z;                     // n x n_covariates, transformed
    std::vector<std::string> z_names;
    std::vector<std::string> z_taus;
  };
  std::vector<HGroup> hgroups;

  Vec offset;
  Vec y;
  std::vector<double> lgamma_y1;

  std::vector<int> panel_of_obs;
  int n_panels = 0;

  double tn_bound = 1.96;
  double clamp_bound = 30.0;

  ParamLayout layout;

  std::vector<int> draw_unit_counts() const;
};

struct LikelihoodOptions {
  double tn_bound = 1.96;
  double clamp_bound = 30.0;
};

ModelDesign build_design(const ModelSpecification& spec, const Dataset& ds,
                         const LikelihoodOptions& opts = {});

/// Structured view of a flattened parameter vector.
struct ParamView {
  Vec bf;
  Vec br;
  Vec spread;              // per rdim, absolute value applied; 0 for corr dims
  Mat L;                   // lower-triangular factor of the correlated block
  std::vector<Vec> delta;  // per hetero group
  double alpha = 0.0;      // NB dispersion (exponentiated)
};

ParamView unflatten(const ModelDesign& d, const Vec& theta);
Vec flatten(const ModelDesign& d, const ParamView& view);

struct EvalDiag {
  long long clamp_count = 0;
};

/// Per-observation random coefficients for draw r (n x n_rdims). Level-5
/// means include the hetero shifts; the correlated block mixes standardized
/// marginals through the Cholesky factor.
Mat build_beta(const ModelDesign& d, const Vec& theta, const DrawMatrix& draws,
               int r);

/// Simulated log-likelihood. Without random dimensions this is the exact
/// sum of log pmfs; with draws it averages within-panel pmf products in log
/// space (log-sum-exp). A non-finite result signals estimation failure and
/// is returned as-is, never thrown.
double simulated_loglik(const ModelDesign& d, const Vec& theta,
                        const DrawMatrix& draws, EvalDiag* diag = nullptr);

/// Draw-free conditional mean with random parameters at their estimated
/// means (ln_n uses exp(b + s^2/2)). Used for held-out prediction.
Vec predict_mean(const ModelDesign& d, const Vec& theta);

}  // namespace countspec
