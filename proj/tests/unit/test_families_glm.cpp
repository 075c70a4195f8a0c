#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spar/errors.hpp"
#include "spar/families.hpp"
#include "spar/glm.hpp"

using namespace spar;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

MatrixXd random_matrix(Index n, Index m, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  MatrixXd x(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) x(i, j) = nd(rng);
  return x;
}

// Penalized normal equations with an unpenalized intercept column, solved
// by an explicit inverse.
VectorXd ridge_oracle(const MatrixXd& z, const VectorXd& y, double eps) {
  const Index n = z.rows(), m = z.cols();
  MatrixXd a(n, m + 1);
  a.col(0).setOnes();
  a.rightCols(m) = z;
  MatrixXd pen = MatrixXd::Identity(m + 1, m + 1) * eps;
  pen(0, 0) = 0.0;
  return (a.transpose() * a + pen).inverse() * a.transpose() * y;
}

}  // namespace

TEST(Family, LinkExamples) {
  EXPECT_DOUBLE_EQ(link_eval(FamilySpec::gaussian(), vec({1.5}))(0), 1.5);
  EXPECT_DOUBLE_EQ(link_eval(FamilySpec::binomial(), vec({0.5}))(0), 0.0);
  EXPECT_DOUBLE_EQ(link_eval(FamilySpec::poisson(), vec({1.0}))(0), 0.0);
  EXPECT_DOUBLE_EQ(linkinv_eval(FamilySpec::binomial(), vec({0.0}))(0), 0.5);
  EXPECT_DOUBLE_EQ(linkinv_eval(FamilySpec::poisson(), vec({0.0}))(0), 1.0);
  EXPECT_DOUBLE_EQ(linkinv_eval(FamilySpec::gaussian(), vec({-3.2}))(0), -3.2);
}

TEST(Family, LinkDomainErrorsCarryIndex) {
  try {
    link_eval(FamilySpec::binomial(), vec({0.3, 1.0}));
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_EQ(e.index(), 1);
  }
  EXPECT_THROW(link_eval(FamilySpec::poisson(), vec({-1.0})), DomainError);
  EXPECT_THROW(linkinv_eval(FamilySpec::gaussian(), vec({NAN})), DomainError);
}

TEST(Family, LinkRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (const auto& fam : {FamilySpec::gaussian(), FamilySpec::binomial(), FamilySpec::poisson()}) {
    VectorXd mu(50);
    for (Index i = 0; i < 50; ++i) mu(i) = u(rng);
    EXPECT_LT((linkinv_eval(fam, link_eval(fam, mu)) - mu).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Family, BinomialClamp) {
  const VectorXd mu = linkinv_eval(FamilySpec::binomial(), vec({-800.0, 800.0}));
  EXPECT_DOUBLE_EQ(mu(0), kMuClamp);
  EXPECT_DOUBLE_EQ(mu(1), 1.0 - kMuClamp);
  EXPECT_DOUBLE_EQ(linkinv_eval(FamilySpec::poisson(), vec({-800.0}))(0), kMuClamp);
}

TEST(Family, NonCanonicalRejected) {
  FamilySpec f = FamilySpec::binomial();
  f.link = LinkId::log;
  EXPECT_THROW(f.validate(), ConfigError);
  EXPECT_THROW(FamilySpec::from_name("gamma"), ConfigError);
}

TEST(Deviance, Examples) {
  EXPECT_DOUBLE_EQ(deviance_eval(FamilySpec::gaussian(), vec({1, 2}), vec({1, 2})), 0.0);
  EXPECT_DOUBLE_EQ(deviance_eval(FamilySpec::gaussian(), vec({1, 2}), vec({0, 0})), 5.0);
  EXPECT_NEAR(deviance_eval(FamilySpec::binomial(), vec({1}), vec({0.5})), 2.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(deviance_eval(FamilySpec::binomial(), vec({1}), vec({0.5})), 1.386294, 1e-6);
  EXPECT_NEAR(deviance_eval(FamilySpec::poisson(), vec({0}), vec({2})), 4.0, 1e-12);
}

TEST(Deviance, InvalidResponse) {
  EXPECT_THROW(deviance_eval(FamilySpec::binomial(), vec({2}), vec({0.5})), DomainError);
  EXPECT_THROW(deviance_eval(FamilySpec::poisson(), vec({-1}), vec({0.5})), DomainError);
  EXPECT_THROW(deviance_eval(FamilySpec::gaussian(), vec({1, 2}), vec({0.5})), ConfigError);
}

TEST(Loglik, Examples) {
  EXPECT_NEAR(loglik_eval(FamilySpec::binomial(), vec({1}), vec({1 - 1e-10})), 0.0, 1e-9);
  EXPECT_NEAR(loglik_eval(FamilySpec::poisson(), vec({0}), vec({1})), -1.0, 1e-12);
}

TEST(Loglik, GaussianDevianceIdentity) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd y(15), mu(15);
    for (Index i = 0; i < 15; ++i) {
      y(i) = nd(rng);
      mu(i) = nd(rng);
    }
    const double sigma2 = 1.7;
    const double ll_sat = loglik_eval(FamilySpec::gaussian(), y, y, std::optional<double>(sigma2));
    const double ll = loglik_eval(FamilySpec::gaussian(), y, mu, std::optional<double>(sigma2));
    EXPECT_NEAR(-2.0 * (ll - ll_sat) * sigma2, deviance_eval(FamilySpec::gaussian(), y, mu), 1e-10);
  }
}

TEST(Glm, SymmetricExactFit) {
  MatrixXd z(2, 1);
  z << 1, -1;
  const auto fit = fit_penalized_glm(z, vec({1, -1}), FamilySpec::gaussian());
  EXPECT_NEAR(fit.intercept, 0.0, 1e-12);
  EXPECT_NEAR(fit.coefficients(0), 1.0, 1e-12);
  EXPECT_TRUE(fit.converged);
}

TEST(Glm, ConstantResponse) {
  std::mt19937_64 rng(1);
  const MatrixXd z = random_matrix(10, 3, rng);
  const auto fit = fit_penalized_glm(z, VectorXd::Constant(10, 4.2), FamilySpec::gaussian());
  EXPECT_NEAR(fit.intercept, 4.2, 1e-10);
  EXPECT_LT(fit.coefficients.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Glm, InterceptOnly) {
  const auto fit = fit_penalized_glm(MatrixXd(5, 0), vec({1, 2, 3, 4, 5}), FamilySpec::gaussian());
  EXPECT_NEAR(fit.intercept, 3.0, 1e-12);
  EXPECT_EQ(fit.coefficients.size(), 0);
}

TEST(Glm, PenalizedGaussianMatchesOracle) {
  std::mt19937_64 rng(5);
  const MatrixXd z = random_matrix(20, 3, rng);
  const VectorXd y = random_matrix(20, 1, rng).col(0);
  for (double eps : {0.0, 2.0}) {
    GlmControl<double> ctl;
    ctl.epsilon = eps;
    const auto fit = fit_penalized_glm(z, y, FamilySpec::gaussian(), ctl);
    const VectorXd oracle = ridge_oracle(z, y, eps);
    EXPECT_NEAR(fit.intercept, oracle(0), 1e-10);
    EXPECT_LT((fit.coefficients - oracle.tail(3)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Glm, DualFormWhenWide) {
  std::mt19937_64 rng(6);
  const MatrixXd z = random_matrix(8, 20, rng);
  const VectorXd y = random_matrix(8, 1, rng).col(0);
  GlmControl<double> ctl;
  ctl.epsilon = 0.5;
  const auto fit = fit_penalized_glm(z, y, FamilySpec::gaussian(), ctl);
  const VectorXd oracle = ridge_oracle(z, y, 0.5);
  EXPECT_NEAR(fit.intercept, oracle(0), 1e-9);
  EXPECT_LT((fit.coefficients - oracle.tail(20)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Glm, SingularWithoutPenalty) {
  MatrixXd z(6, 2);
  z << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10, 6, 12;
  EXPECT_THROW(fit_penalized_glm(z, vec({1, 2, 3, 4, 5, 7}), FamilySpec::gaussian()), SingularError);
  const auto fit = fit_marginal_glm(z, vec({1, 2, 3, 4, 5, 7}), FamilySpec::gaussian(), GlmControl<double>{}, 0.1);
  EXPECT_TRUE(fit.coefficients.allFinite());
}

TEST(Glm, MarginalDropsZeroColumns) {
  std::mt19937_64 rng(8);
  MatrixXd z = random_matrix(12, 3, rng);
  z.col(1).setZero();
  const VectorXd y = random_matrix(12, 1, rng).col(0);
  const auto fit = fit_marginal_glm(z, y, FamilySpec::gaussian(), GlmControl<double>{}, 1.0);
  EXPECT_EQ(fit.coefficients(1), 0.0);
  MatrixXd reduced(12, 2);
  reduced << z.col(0), z.col(2);
  const VectorXd oracle = ridge_oracle(reduced, y, 0.0);
  EXPECT_NEAR(fit.coefficients(2), oracle(2), 1e-10);
}

// The gradient of deviance/2 + eps/2 |g|^2 vanishes at the optimum.
TEST(Glm, BinomialStationarity) {
  std::mt19937_64 rng(9);
  const MatrixXd z = random_matrix(60, 4, rng);
  VectorXd y(60);
  std::uniform_real_distribution<double> u;
  for (Index i = 0; i < 60; ++i) y(i) = u(rng) < 1.0 / (1.0 + std::exp(-z(i, 0))) ? 1.0 : 0.0;
  GlmControl<double> ctl;
  ctl.epsilon = 0.3;
  ctl.tol = 1e-12;
  const auto fit = fit_penalized_glm(z, y, FamilySpec::binomial(), ctl);
  ASSERT_TRUE(fit.converged);
  const VectorXd mu = linkinv_eval(FamilySpec::binomial(), ((z * fit.coefficients).array() + fit.intercept).matrix());
  const VectorXd grad = -z.transpose() * (y - mu) + 0.3 * fit.coefficients;
  EXPECT_LT(grad.cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR((y - mu).sum(), 0.0, 1e-6);
}

TEST(Glm, PoissonStationarity) {
  std::mt19937_64 rng(10);
  const MatrixXd z = random_matrix(50, 3, rng) * 0.5;
  VectorXd y(50);
  for (Index i = 0; i < 50; ++i) {
    std::poisson_distribution<int> pois(std::exp(0.5 + z(i, 1)));
    y(i) = pois(rng);
  }
  GlmControl<double> ctl;
  ctl.tol = 1e-12;
  const auto fit = fit_penalized_glm(z, y, FamilySpec::poisson(), ctl);
  ASSERT_TRUE(fit.converged);
  const VectorXd mu = ((z * fit.coefficients).array() + fit.intercept).exp();
  EXPECT_LT((z.transpose() * (y - mu)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Glm, ObjectiveNonIncreasing) {
  std::mt19937_64 rng(12);
  const MatrixXd z = random_matrix(40, 5, rng) * 3.0;
  VectorXd y(40);
  for (Index i = 0; i < 40; ++i) y(i) = z(i, 0) + z(i, 1) > 0 ? 1.0 : 0.0;
  GlmControl<double> ctl;
  ctl.epsilon = 0.01;
  const auto fit = fit_penalized_glm(z, y, FamilySpec::binomial(), ctl);
  for (std::size_t i = 1; i < fit.objective_trace.size(); ++i)
    EXPECT_LE(fit.objective_trace[i], fit.objective_trace[i - 1] * (1 + 1e-12));
}

TEST(Glm, SeparatedBinomialStaysFinite) {
  MatrixXd z(8, 1);
  z << -4, -3, -2, -1, 1, 2, 3, 4;
  const VectorXd y = vec({0, 0, 0, 0, 1, 1, 1, 1});
  GlmControl<double> ctl;
  ctl.epsilon = 1e-3 * 8;
  const auto fit = fit_penalized_glm(z, y, FamilySpec::binomial(), ctl);
  EXPECT_TRUE(fit.converged);
  EXPECT_TRUE(fit.coefficients.allFinite());
  EXPECT_LT(fit.coefficients.norm(), 1e6);
}

TEST(Glm, PredictorsNeverIncreaseDeviance) {
  std::mt19937_64 rng(13);
  for (const auto& fam : {FamilySpec::gaussian(), FamilySpec::binomial(), FamilySpec::poisson()}) {
    const MatrixXd z = random_matrix(30, 2, rng);
    VectorXd y(30);
    std::uniform_int_distribution<int> coin(0, 1);
    for (Index i = 0; i < 30; ++i) y(i) = fam.family == FamilyId::gaussian ? z(i, 0) + coin(rng) : coin(rng) * (1 + (i % 2) * (fam.family == FamilyId::poisson));
    const auto full = fit_penalized_glm(z, y, fam);
    const auto null = fit_penalized_glm(MatrixXd(30, 0), y, fam);
    EXPECT_LE(full.deviance, null.deviance + 1e-8);
  }
}

TEST(Glm, FloatScalar) {
  Eigen::MatrixXf z(4, 1);
  z << 1, 2, 3, 4;
  Eigen::VectorXf y(4);
  y << 2, 4, 6, 8;
  const auto fit = fit_penalized_glm(z, y, FamilySpec::gaussian(), GlmControl<float>{});
  EXPECT_NEAR(fit.coefficients(0), 2.0f, 1e-4f);
}
