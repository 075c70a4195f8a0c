#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spar/families.hpp"
#include "spar/rng.hpp"
#include "spar/screening.hpp"
#include "spar/types.hpp"

namespace spar {

enum class RpKind { gaussian, sparse, cw, haar, haar_select, plugin };

std::string rp_kind_name(RpKind k);
RpKind rp_kind_from_name(const std::string& name);

struct RpSpec {
  RpKind kind = RpKind::cw;
  double psi = 1.0;         // sparse only
  bool data_driven = true;  // cw only
  std::optional<Index> mslow;  // defaults to ceil(log p)
  std::optional<Index> msup;   // defaults to floor(n / 2)
  Index b2 = 50;               // haar_select candidates
  double holdout_frac = 0.25;  // haar_select
  std::string plugin_name;
  Controls controls;

  void validate() const;
  bool uses_data() const { return (kind == RpKind::cw && data_driven) || kind == RpKind::haar_select; }
};

/// m x q projection, stored dense or as a compressed sparse matrix.
class ProjectionMatrix {
 public:
  ProjectionMatrix() = default;
  ProjectionMatrix(MatrixXd values, RpKind kind);
  ProjectionMatrix(SparseMatrix<double> values, RpKind kind);
  static ProjectionMatrix from_triplets(Index m, Index q, const std::vector<Eigen::Triplet<double>>& triplets,
                                        RpKind kind);

  Index rows() const { return sparse_ ? sparse_values_.rows() : dense_values_.rows(); }
  Index cols() const { return sparse_ ? sparse_values_.cols() : dense_values_.cols(); }
  RpKind kind() const { return kind_; }
  bool is_sparse() const { return sparse_; }
  const MatrixXd& dense_values() const { return dense_values_; }
  const SparseMatrix<double>& sparse_values() const { return sparse_values_; }

  MatrixXd to_dense() const;
  /// Phi' * gamma.
  VectorXd transpose_times(const VectorXd& gamma) const;
  /// Stored entries in column-major order (explicit zeros included for sparse storage).
  std::vector<Eigen::Triplet<double>> triplets() const;

  /// Row of the single nonzero in each column. Throws unless every column
  /// holds exactly one stored entry.
  std::vector<Index> column_rows() const;
  /// Same sparsity structure with the per-column entry replaced.
  ProjectionMatrix with_column_values(const VectorXd& values) const;

 private:
  RpKind kind_ = RpKind::gaussian;
  bool sparse_ = false;
  MatrixXd dense_values_;
  SparseMatrix<double> sparse_values_;
};

/// M iid goal dimensions uniform on {mslow, ..., msup}.
std::vector<Index> draw_goal_dims(Index count, Index mslow, Index msup, Rng& rng);

/// Resolved (mslow, msup) for n rows and p predictors: ceil(log p) and
/// floor(n / 2) unless overridden, kept within [1, ...].
std::pair<Index, Index> goal_dim_bounds(const RpSpec& spec, Index n, Index p);

/// Smallest dimension for which a JL embedding of n points keeps pairwise
/// distances within (1 +/- eps) with probability 1 - n^-tau.
Index jl_min_dim(double n, double eps, double tau);

ProjectionMatrix gen_gaussian(Index m, Index q, Rng& rng);
ProjectionMatrix gen_sparse(Index m, Index q, double psi, Rng& rng);
/// Sparse embedding: column j has its single entry in a uniformly drawn
/// row. The entry is a Rademacher sign, or diag_values[j] when data-driven.
ProjectionMatrix gen_cw(Index m, Index q, bool data_driven, const std::optional<VectorXd>& diag_values, Rng& rng);
/// Orthonormal rows from the QR factor of a q x m standard normal matrix.
ProjectionMatrix gen_haar(Index m, Index q, Rng& rng);

struct HoldoutChoice {
  std::size_t best = 0;
  std::vector<double> errors;
};

/// Fits each candidate on the training rows and scores it on the holdout
/// rows (misclassification for binomial, MSE otherwise). Ties keep the
/// first candidate.
HoldoutChoice select_best_projection(const std::vector<ProjectionMatrix>& candidates, const MatrixXd& x_sub,
                                     const VectorXd& y, const FamilySpec& fam, double epsilon,
                                     const std::vector<Index>& holdout_rows);

/// Best of b2 Haar candidates on a random holdout of floor(n * holdout_frac) rows.
ProjectionMatrix gen_haar_select(Index m, const MatrixXd& x_sub, const VectorXd& y, const FamilySpec& fam,
                                 Index b2, double holdout_frac, double epsilon, Rng& rng);

/// Data available to data-driven generators; x and y are standardized.
struct ProjectionData {
  const MatrixXd* x = nullptr;
  const VectorXd* y = nullptr;
  const VectorXd* omega = nullptr;
  FamilySpec family;
  double epsilon = 0.0;
};

/// User generator: (m, selected columns, data or null, controls) -> m x q.
using ProjectionPlugin = std::function<ProjectionMatrix(Index m, const IndexSet& indices,
                                                        const ProjectionData* data, const Controls& controls)>;

class ProjectionRegistry {
 public:
  static ProjectionRegistry& instance();
  void add(const std::string& name, ProjectionPlugin fn);
  const ProjectionPlugin& get(const std::string& name) const;
  bool contains(const std::string& name) const;

 private:
  std::map<std::string, ProjectionPlugin> plugins_;
};

/// Dispatches on spec.kind for one marginal model with columns `indices`.
ProjectionMatrix generate_projection(const RpSpec& spec, Index m, const IndexSet& indices,
                                     const ProjectionData& data, Rng& rng);

/// Refreshes the data part of a frozen projection. Only data-driven cw
/// matrices change: their entries become omega restricted to `indices`;
/// row assignments are kept.
ProjectionMatrix refresh_projection(const RpSpec& spec, const ProjectionMatrix& phi, const IndexSet& indices,
                                    const VectorXd& omega);

/// Z = X_sub * Phi'.
MatrixXd project(const MatrixXd& x_sub, const ProjectionMatrix& phi);

/// Columns `indices` of x (all rows).
MatrixXd select_columns(const MatrixXd& x, const IndexSet& indices);

}  // namespace spar
