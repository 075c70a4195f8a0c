#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spar/families.hpp"
#include "spar/projection.hpp"
#include "spar/screening.hpp"
#include "spar/types.hpp"

namespace spar {

struct ModelSpec {
  std::optional<double> epsilon;  // gaussian: 0, otherwise 1e-4 * n
  int max_iter = 100;
  double tol = 1e-8;

  double resolved_epsilon(const FamilySpec& fam, Index n) const {
    if (epsilon) return *epsilon;
    return fam.family == FamilyId::gaussian ? 0.0 : 1e-4 * static_cast<double>(n);
  }
};

enum class Measure { deviance, mse, mae, misclassification, one_minus_auc };

std::string measure_name(Measure m);
Measure measure_from_name(const std::string& name);

enum class ResponseType { response, link };
enum class AverageType { link, response };
enum class OptPar { best, one_se };

/// Everything that determines a fit. `threads` affects speed only.
struct SparConfig {
  FamilySpec family = FamilySpec::gaussian();
  ScreenSpec screen;
  RpSpec rp;
  ModelSpec model;
  Index nnu = 20;
  std::vector<double> nus;  // explicit threshold grid; empty = quantile grid
  std::vector<Index> nummods{20};
  Measure measure = Measure::deviance;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
  Index max_nummod() const;
};

struct StandardizationStats {
  VectorXd x_mean;
  VectorXd x_sd;  // 1 for constant columns
  double y_mean = 0.0;
  double y_sd = 1.0;
  IndexSet constant_cols;
};

struct Standardized {
  MatrixXd x;
  VectorXd y;
  StandardizationStats stats;
};

/// Centers and scales the columns of x (sample sd, n - 1 denominator);
/// constant columns become zero. y is standardized for gaussian only.
Standardized standardize(const MatrixXd& x, const VectorXd& y, const FamilySpec& fam);

struct MarginalModel {
  IndexSet indices;
  ProjectionMatrix projection;
  Index m = 0;
  double gamma0 = 0.0;
  VectorXd gamma;
  SparseVector<double> beta;  // Phi' gamma scattered onto indices, length p
  bool converged = false;
};

/// beta = Phi' gamma placed at `indices` in a length-p sparse vector.
SparseVector<double> backproject(const ProjectionMatrix& phi, const VectorXd& gamma, const IndexSet& indices, Index p);

/// Externally supplied screening sets and projections, one per model.
struct FrozenProjections {
  std::vector<IndexSet> indices;
  std::vector<ProjectionMatrix> projections;
  bool refresh_data = true;  // refresh data-driven projections from new screening coefficients
};

struct EnsembleFit {
  std::vector<MarginalModel> models;
  ScreeningResult screening;
  std::vector<std::string> warnings;
};

/// Fits `count` marginal models on standardized data: screen, project, fit a
/// penalized GLM, back-project. Every model draws from its own substreams of
/// `seed`, so the result does not depend on cfg.threads.
EnsembleFit fit_ensemble(const MatrixXd& x_std, const VectorXd& y_std, const SparConfig& cfg, Index count,
                         std::uint64_t seed, const FrozenProjections* frozen = nullptr,
                         const IndexSet& constant_cols = {});

/// Linear-interpolation quantile of sorted values (probability in [0, 1]).
double quantile_sorted(std::span<const double> sorted, double prob);

/// Threshold grid: explicit values sorted and deduplicated, otherwise 0 plus
/// the quantiles of the nonzero |beta| at levels i / nnu, i = 1..nnu-1.
std::vector<double> build_nu_grid(std::span<const MarginalModel> models, Index nnu,
                                  const std::vector<double>& explicit_nus = {},
                                  std::vector<std::string>* warnings = nullptr);

/// Entries with |beta| < nu are dropped; |beta| == nu survives.
SparseVector<double> threshold_beta(const SparseVector<double>& beta, double nu);

struct Coefficients {
  double intercept = 0.0;
  VectorXd beta;  // original predictor scale
  double nu = 0.0;
  Index nummod = 0;
  Index active = 0;
};

/// Thresholded average over the first `nummod` models, mapped back to the
/// original scale of x and y.
Coefficients average_coefficients(std::span<const MarginalModel> models, const StandardizationStats& stats,
                                  const FamilySpec& fam, double nu, Index nummod);

/// Averaged coefficients of the standardized models before destandardizing.
struct StandardizedAverage {
  double intercept = 0.0;
  VectorXd beta;
};
StandardizedAverage average_standardized(std::span<const MarginalModel> models, double nu, Index nummod, Index p);

struct GridChoice {
  double nu = 0.0;
  Index nummod = 0;
  double measure = 0.0;
  double se = 0.0;
  Index active = 0;
};

struct GridCell {
  double nu = 0.0;
  Index nummod = 0;
  double measure = 0.0;  // validation value, or mean over folds
  double se = 0.0;
  Index active = 0;
  std::vector<double> fold_values;
};

/// One cell per (nu, nummod); cells are ordered nu-major.
struct SelectionGrid {
  std::vector<double> nus;
  std::vector<Index> nummods;
  std::vector<GridCell> cells;
  bool cross_validated = false;
  Index nfolds = 0;

  const GridCell& at(std::size_t nu_index, std::size_t nummod_index) const {
    return cells.at(nu_index * nummods.size() + nummod_index);
  }
};

struct SparEnsemble {
  FamilySpec family;
  StandardizationStats stats;
  std::vector<MarginalModel> models;
  std::vector<double> nus;
  std::vector<Index> nummods;
  SelectionGrid grid;
  GridChoice best;
  std::optional<GridChoice> one_se;
  SparConfig config;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  Index num_predictors() const { return stats.x_mean.size(); }
};

/// Coefficients at an explicit (nu, nummod), falling back to the chosen cell.
Coefficients coef(const SparEnsemble& ens, std::optional<double> nu = {}, std::optional<Index> nummod = {},
                  OptPar opt_par = OptPar::best);

VectorXd predict(const Coefficients& c, const FamilySpec& fam, const MatrixXd& x_new,
                 ResponseType type = ResponseType::response);

/// Predictions from an ensemble. avg_type = link averages coefficients;
/// avg_type = response averages each model's mean prediction.
VectorXd predict(const SparEnsemble& ens, const MatrixXd& x_new, ResponseType type = ResponseType::response,
                 AverageType avg_type = AverageType::link, std::optional<double> nu = {},
                 std::optional<Index> nummod = {}, OptPar opt_par = OptPar::best);

VectorXd predict_models(std::span<const MarginalModel> models, const StandardizationStats& stats,
                        const FamilySpec& fam, const MatrixXd& x_new, ResponseType type, AverageType avg_type,
                        double nu, Index nummod);

/// Validation loss on response-scale predictions. Deviance is summed; the
/// others are means. misclassification and one_minus_auc need binomial.
/// one_minus_auc is NaN when y has a single class.
double eval_measure(Measure measure, const FamilySpec& fam, const VectorXd& y, const VectorXd& mu);

}  // namespace spar
