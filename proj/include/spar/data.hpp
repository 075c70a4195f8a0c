#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spar/families.hpp"
#include "spar/types.hpp"

namespace spar {

struct Dataset {
  MatrixXd x;
  VectorXd y;
  std::vector<std::string> column_names;  // predictors only; empty without a header
  std::optional<MatrixXd> x_test;
  std::optional<VectorXd> y_test;
};

enum class ActivePositions { first, random };

struct SyntheticSpec {
  Index n = 200;
  Index p = 2000;
  Index n_active = 100;
  double mu = 1.0;
  std::vector<double> coef_pool{-3, -2, -1, 1, 2, 3};
  double sigma2 = 83.0;
  ActivePositions active_positions = ActivePositions::first;
  FamilySpec family = FamilySpec::gaussian();
  Index n_test = 0;
  double rho = 0.0;  // AR(1) correlation between neighbouring predictors

  void validate() const;
};

struct SyntheticTruth {
  double mu = 0.0;
  double sigma2 = 0.0;
  VectorXd beta;
  IndexSet active;
};

struct SyntheticData {
  Dataset data;
  SyntheticTruth truth;
};

/// Rows of x are N(0, I) (or AR(1) with correlation rho); active
/// coefficients are drawn uniformly from coef_pool. Gaussian responses get
/// N(0, sigma2) noise, binomial responses are Bernoulli(logistic(eta)) and
/// poisson responses Poisson(exp(eta)).
SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Response column chosen by header name or zero-based index.
struct ResponseColumn {
  std::optional<std::string> name;
  std::optional<Index> index;
};

/// Strict numeric CSV reader. Without a response column every column is a
/// predictor and y is empty.
Dataset load_csv(const std::string& path, bool has_header, const std::optional<ResponseColumn>& response);
Dataset parse_csv(const std::string& text, bool has_header, const std::optional<ResponseColumn>& response);

/// Writes predictors followed by the response column "y" (if y is non-empty).
void save_csv(const std::string& path, const MatrixXd& x, const VectorXd& y,
              const std::vector<std::string>& column_names = {}, bool header = true);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

std::string truth_to_json(const SyntheticTruth& truth);
void save_truth(const std::string& path, const SyntheticTruth& truth);

}  // namespace spar
