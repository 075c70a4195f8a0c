#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spar/ensemble.hpp"

namespace spar {

/// R-style summary() of a vector: type-7 quartiles plus the mean.
struct FiveNumberSummary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Summary of the nonzero entries; empty when every entry is zero.
std::optional<FiveNumberSummary> summarize_nonzero(const VectorXd& v);

/// Printable description of a fitted ensemble: the chosen (nummod, nu), the
/// active count "a / p" and a summary of the nonzero coefficients. For a
/// cross-validated ensemble the one-SE choice is described as well.
std::string format_summary(const SparEnsemble& ens);

enum class PlotAlong { nu, nummod };

struct CurvePoint {
  double nu = 0.0;
  Index nummod = 0;
  double measure = 0.0;
  double se = 0.0;
  Index active = 0;
};

/// Selection-table slice along nu at fixed nummod, or along nummod at fixed
/// nu. The fixed value defaults to the best cell's.
std::vector<CurvePoint> grid_curve(const SparEnsemble& ens, PlotAlong along, std::optional<double> nu = {},
                                   std::optional<Index> nummod = {});

struct ResidualPoint {
  double fitted = 0.0;
  double residual = 0.0;
};

/// Response-scale fitted values and y - fitted.
std::vector<ResidualPoint> residuals_vs_fitted(const SparEnsemble& ens, const MatrixXd& x, const VectorXd& y,
                                               std::optional<double> nu = {}, std::optional<Index> nummod = {},
                                               OptPar opt_par = OptPar::best);

struct CoefMatrix {
  std::vector<Index> predictors;  // zero-based predictor of each row
  MatrixXd values;                // one row per predictor, sorted descending across models
};

/// Standardized, unthresholded coefficients of every marginal model. Rows
/// follow coef_order (zero-based permutation of 0..p-1, identity if empty)
/// and are restricted to the 1-based, inclusive positions prange.
CoefMatrix coef_matrix(const SparEnsemble& ens, std::optional<std::pair<Index, Index>> prange = {},
                       const std::vector<Index>& coef_order = {});

std::string grid_curve_csv(const std::vector<CurvePoint>& curve);
std::string residuals_csv(const std::vector<ResidualPoint>& points);
std::string coef_matrix_csv(const CoefMatrix& cm);
/// nu,nummod,mean,se,active
std::string selection_csv(const SelectionGrid& grid);
/// nu,nummod,fold,value
std::string folds_csv(const SelectionGrid& grid);

}  // namespace spar
