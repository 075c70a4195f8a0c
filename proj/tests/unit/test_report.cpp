#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "spar/errors.hpp"
#include "spar/report.hpp"
#include "spar/selection.hpp"

using namespace spar;

namespace {

MatrixXd random_matrix(Index n, Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  MatrixXd x(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) x(i, j) = nd(rng);
  return x;
}

struct Fitted {
  MatrixXd x;
  VectorXd y;
  SparEnsemble ens;
};

Fitted fitted(bool cv) {
  Fitted f;
  f.x = random_matrix(40, 30, 1);
  f.y = f.x.col(0) * 2 - f.x.col(4) + random_matrix(40, 1, 2).col(0);
  SparConfig cfg;
  cfg.nummods = {2, 5};
  cfg.nnu = 4;
  cfg.measure = Measure::mse;
  if (cv) {
    f.ens = cross_validate(f.x, f.y, cfg, 4).ensemble;
  } else {
    const MatrixXd xv = random_matrix(20, 30, 3);
    const VectorXd yv = xv.col(0) * 2 - xv.col(4);
    f.ens = fit_spar(f.x, f.y, cfg, &xv, &yv);
  }
  return f;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Summary, TypeSevenQuartiles) {
  VectorXd v(7);
  v << 0, -1, 0.5, 0, 2, 7, 0;
  const auto s = summarize_nonzero(v);
  ASSERT_TRUE(s.has_value());
  EXPECT_DOUBLE_EQ(s->min, -1.0);
  EXPECT_DOUBLE_EQ(s->q1, 0.125);
  EXPECT_DOUBLE_EQ(s->median, 1.25);
  EXPECT_DOUBLE_EQ(s->mean, 2.125);
  EXPECT_DOUBLE_EQ(s->q3, 3.25);
  EXPECT_DOUBLE_EQ(s->max, 7.0);
  EXPECT_FALSE(summarize_nonzero(VectorXd::Zero(3)).has_value());
}

TEST(Summary, ValidationText) {
  const auto f = fitted(false);
  const std::string text = format_summary(f.ens);
  EXPECT_EQ(text.rfind("spar object:\n", 0), 0u);
  EXPECT_NE(text.find("Smallest Validation Measure reached for nummod=" + std::to_string(f.ens.best.nummod)),
            std::string::npos);
  const auto c = coef(f.ens);
  EXPECT_NE(text.find(std::to_string(c.active) + " / 30 active predictors."), std::string::npos);
  EXPECT_NE(text.find("Min."), std::string::npos);
  EXPECT_NE(text.find("3rd Qu."), std::string::npos);
}

TEST(Summary, CrossValidatedText) {
  const auto f = fitted(true);
  const std::string text = format_summary(f.ens);
  EXPECT_EQ(text.rfind("spar.cv object:\n", 0), 0u);
  EXPECT_NE(text.find("Smallest CV-Meas"), std::string::npos);
  EXPECT_NE(text.find("Sparsest coefficient within one standard error"), std::string::npos);
}

TEST(GridCurve, SlicesTheTable) {
  const auto f = fitted(true);
  const auto along_nu = grid_curve(f.ens, PlotAlong::nu);
  ASSERT_EQ(along_nu.size(), f.ens.nus.size());
  for (std::size_t i = 0; i < along_nu.size(); ++i) {
    EXPECT_EQ(along_nu[i].nummod, f.ens.best.nummod);
    EXPECT_EQ(along_nu[i].nu, f.ens.nus[i]);
  }
  const auto along_m = grid_curve(f.ens, PlotAlong::nummod, f.ens.nus[1]);
  ASSERT_EQ(along_m.size(), 2u);
  EXPECT_EQ(along_m[1].nummod, 5);
  EXPECT_EQ(along_m[0].nu, f.ens.nus[1]);
  const auto csv = grid_curve_csv(along_m);
  EXPECT_EQ(csv.rfind("nu,nummod,measure,se,lower,upper,active\n", 0), 0u);
  EXPECT_EQ(count_lines(csv), 3u);
}

TEST(Residuals, EqualResponseMinusPrediction) {
  const auto f = fitted(false);
  const auto pts = residuals_vs_fitted(f.ens, f.x, f.y);
  const VectorXd pred = predict(f.ens, f.x);
  ASSERT_EQ(pts.size(), 40u);
  for (Index i = 0; i < 40; ++i) {
    EXPECT_DOUBLE_EQ(pts[static_cast<std::size_t>(i)].fitted, pred(i));
    EXPECT_DOUBLE_EQ(pts[static_cast<std::size_t>(i)].residual, f.y(i) - pred(i));
  }
  EXPECT_THROW(residuals_vs_fitted(f.ens, f.x, f.y.head(3)), ConfigError);
  EXPECT_EQ(count_lines(residuals_csv(pts)), 41u);
}

TEST(CoefMatrix, RowsSortedDescending) {
  const auto f = fitted(false);
  const auto cm = coef_matrix(f.ens);
  ASSERT_EQ(cm.values.rows(), 30);
  ASSERT_EQ(cm.values.cols(), 5);
  for (Index r = 0; r < 30; ++r) {
    for (Index k = 1; k < 5; ++k) EXPECT_GE(cm.values(r, k - 1), cm.values(r, k));
    // Same multiset as the model coefficients of that predictor.
    double sum = 0;
    for (const auto& m : f.ens.models) sum += m.beta.coeff(cm.predictors[static_cast<std::size_t>(r)]);
    EXPECT_NEAR(cm.values.row(r).sum(), sum, 1e-12);
  }
}

TEST(CoefMatrix, OrderAndRange) {
  const auto f = fitted(false);
  std::vector<Index> order(30);
  for (Index j = 0; j < 30; ++j) order[static_cast<std::size_t>(j)] = 29 - j;
  const auto cm = coef_matrix(f.ens, std::make_pair(Index{2}, Index{4}), order);
  EXPECT_EQ(cm.predictors, (std::vector<Index>{28, 27, 26}));
  EXPECT_EQ(cm.values.rows(), 3);
  const auto csv = coef_matrix_csv(cm);
  EXPECT_EQ(csv.rfind("predictor,rank1,rank2,rank3,rank4,rank5\n29,", 0), 0u);
  EXPECT_THROW(coef_matrix(f.ens, std::make_pair(Index{0}, Index{3})), ConfigError);
  EXPECT_THROW(coef_matrix(f.ens, std::nullopt, {0, 1}), ConfigError);
}

TEST(SelectionCsv, OneRowPerCell) {
  const auto f = fitted(true);
  const auto sel = selection_csv(f.ens.grid);
  EXPECT_EQ(sel.rfind("nu,nummod,mean,se,active\n", 0), 0u);
  EXPECT_EQ(count_lines(sel), f.ens.grid.cells.size() + 1);
  const auto folds = folds_csv(f.ens.grid);
  EXPECT_EQ(count_lines(folds), f.ens.grid.cells.size() * 4 + 1);
}
