#pragma once

#include <optional>
#include <span>
#include <vector>

#include "spar/ensemble.hpp"

namespace spar {

/// Measure and active count for every (nu, nummod) on the given data.
/// Predictions are response-scale with coefficient (link) averaging.
SelectionGrid evaluate_grid(std::span<const MarginalModel> models, const StandardizationStats& stats,
                            const FamilySpec& fam, const MatrixXd& x_eval, const VectorXd& y_eval, Measure measure,
                            const std::vector<double>& nus, const std::vector<Index>& nummods, int threads = 1);

/// Cell with the smallest measure. Ties go to the larger nu, then the
/// smaller nummod. NaN cells are never chosen.
GridChoice argmin_cell(const SelectionGrid& grid);

/// Sparsest cell (fewest active predictors) whose mean is within one SE of
/// the best cell, where the SE is that of the best cell. Ties as argmin_cell.
GridChoice one_se_rule(const SelectionGrid& grid);

struct ValidationSelection {
  SelectionGrid grid;
  GridChoice best;
};

ValidationSelection select_on_validation(std::span<const MarginalModel> models, const StandardizationStats& stats,
                                         const FamilySpec& fam, const MatrixXd& x_val, const VectorXd& y_val,
                                         Measure measure, const std::vector<double>& nus,
                                         const std::vector<Index>& nummods, int threads = 1);

/// Full fit with threshold/ensemble-size selection on a validation set. With
/// no validation data the training data is used and a warning recorded.
SparEnsemble fit_spar(const MatrixXd& x, const VectorXd& y, const SparConfig& cfg,
                      const MatrixXd* x_val = nullptr, const VectorXd* y_val = nullptr,
                      const FrozenProjections* frozen = nullptr);

/// Held-out rows of each fold, sorted. Rows are permuted with the master
/// seed and dealt round-robin into near-equal folds; binomial responses are
/// dealt class by class so every fold sees both classes where possible.
std::vector<std::vector<Index>> make_folds(const VectorXd& y, const FamilySpec& fam, Index nfolds,
                                           std::uint64_t seed);

struct CvResult {
  SparEnsemble ensemble;
  std::vector<std::vector<Index>> folds;
  std::vector<bool> fold_used;
  // Projections each fold actually used (after any data refresh).
  std::vector<std::vector<ProjectionMatrix>> fold_projections;
};

/// k-fold cross-validation. Index sets and projections come from one fit on
/// all rows and stay fixed across folds; data-driven sparse embeddings get
/// their entries refreshed from each fold's screening coefficients.
CvResult cross_validate(const MatrixXd& x, const VectorXd& y, const SparConfig& cfg, Index nfolds = 10);

}  // namespace spar
