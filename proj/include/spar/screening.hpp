#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "spar/families.hpp"
#include "spar/rng.hpp"
#include "spar/types.hpp"

namespace spar {

// Free-form numeric options forwarded to plugins.
using Controls = std::map<std::string, double>;

enum class ScreenMethod { cor, marglik, ridge, plugin };
enum class SelectionType { prob, fixed };

std::string screen_method_name(ScreenMethod m);
ScreenMethod screen_method_from_name(const std::string& name);

struct ScreenSpec {
  ScreenMethod method = ScreenMethod::ridge;
  std::optional<Index> nscreen;  // defaults to 2n
  SelectionType selection_type = SelectionType::prob;
  std::optional<double> split_data_prop;
  std::optional<double> epsilon;  // marglik: 0, ridge: 1e-2 * n
  std::string plugin_name;
  Controls controls;

  void validate() const;
};

struct ScreeningResult {
  VectorXd omega;
  IndexSet excluded;  // constant columns; omega is exactly 0 there
  ScreenMethod method = ScreenMethod::ridge;
  int nonconverged = 0;  // marglik fits that did not converge
};

/// User screening function: (x, y, controls) -> length-p finite vector.
using ScreeningPlugin =
    std::function<VectorXd(const MatrixXd& x, const VectorXd& y, const Controls& controls)>;

/// Process-wide name -> plugin table used by ScreenMethod::plugin.
class ScreeningRegistry {
 public:
  static ScreeningRegistry& instance();
  void add(const std::string& name, ScreeningPlugin fn);
  const ScreeningPlugin& get(const std::string& name) const;
  bool contains(const std::string& name) const;

 private:
  std::map<std::string, ScreeningPlugin> plugins_;
};

/// Columns whose values are all identical.
IndexSet constant_columns(const MatrixXd& x);

/// Pearson correlation of each column with y. Constant columns get 0.
ScreeningResult screen_cor(const MatrixXd& x, const VectorXd& y);

/// Slope of a univariate GLM of y on each column (with intercept).
ScreeningResult screen_marglik(const MatrixXd& x, const VectorXd& y, const FamilySpec& fam,
                               double epsilon = 0.0, int threads = 1);

/// Multivariate ridge coefficients with unpenalized intercept. With p > n the
/// solve runs in the n x n dual form.
ScreeningResult screen_ridge(const MatrixXd& x, const VectorXd& y, const FamilySpec& fam,
                             std::optional<double> epsilon = {});

/// Dispatches on spec.method.
ScreeningResult compute_screening(const MatrixXd& x, const VectorXd& y, const FamilySpec& fam,
                                  const ScreenSpec& spec, int threads = 1);

/// Index set for one marginal model, sorted ascending.
///
/// If nscreen covers every non-excluded column, all of them are returned.
/// fixed: the nscreen largest |omega|, ties to the smaller index.
/// prob: successive sampling without replacement with weights |omega|,
/// drawn via exponential keys u^(1/w). Zero-weight columns only fill slots
/// once positive weights are exhausted, uniformly at random.
IndexSet select_screened(const ScreeningResult& sr, Index nscreen, SelectionType type, Rng& rng);

struct RowSplit {
  std::vector<Index> screen_rows;
  std::vector<Index> model_rows;
};

/// Disjoint row partition for screening vs. model fitting. Without a
/// proportion both parts are all rows.
RowSplit split_for_screening(Index n, std::optional<double> split_data_prop, Rng& rng);

}  // namespace spar
