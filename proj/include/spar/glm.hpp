#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "spar/errors.hpp"
#include "spar/families.hpp"
#include "spar/types.hpp"

namespace spar {

template <class T = double>
struct GlmControl {
  T epsilon = 0;  // ridge weight on the slopes; the intercept is never penalized
  int max_iter = 100;
  T tol = T(1e-8);  // relative deviance change
  int max_halvings = 30;
};

template <class T = double>
struct GlmFit {
  T intercept = 0;
  Vector<T> coefficients;
  bool converged = false;
  int iterations = 0;
  T deviance = 0;
  // Penalized objective deviance/2 + epsilon/2 |gamma|^2 after each accepted step.
  std::vector<T> objective_trace;
};

namespace detail {

/// Solves min_{b0, b} sum_i w_i (r_i - b0 - z_i' b)^2 + eps |b|^2.
/// Centering by weighted means removes the unpenalized intercept; with more
/// columns than rows the system is solved in its n x n dual form.
template <class DerivedZ, class T>
void weighted_ridge_step(const Eigen::MatrixBase<DerivedZ>& z, const Vector<T>& w,
                         const Vector<T>& r, T eps, T& b0, Vector<T>& b) {
  const Index n = z.rows();
  const Index m = z.cols();
  const T wsum = w.sum();
  const T rbar = w.dot(r) / wsum;
  if (m == 0) {
    b0 = rbar;
    b.resize(0);
    return;
  }
  const Vector<T> zbar = (z.transpose() * w) / wsum;
  const Vector<T> sw = w.array().sqrt();
  const Matrix<T> a = sw.asDiagonal() * (z.rowwise() - zbar.transpose());
  const Vector<T> rhs = sw.cwiseProduct((r.array() - rbar).matrix());

  if (m <= n) {
    if (eps == T(0)) {
      Eigen::ColPivHouseholderQR<Matrix<T>> qr(a);
      if (qr.rank() < m) throw SingularError("design is rank deficient; use a positive penalty");
      b = qr.solve(rhs);
    } else {
      Matrix<T> gram = Matrix<T>::Identity(m, m) * eps;
      gram.template selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
      Eigen::LLT<Matrix<T>> llt(gram);
      if (llt.info() != Eigen::Success) throw SingularError("penalized gram matrix not positive definite");
      b = llt.solve(a.transpose() * rhs);
    }
  } else {
    if (eps == T(0)) throw SingularError("more columns than rows needs a positive penalty");
    Matrix<T> kernel = Matrix<T>::Identity(n, n) * eps;
    kernel.template selfadjointView<Eigen::Lower>().rankUpdate(a);
    Eigen::LLT<Matrix<T>> llt(kernel);
    if (llt.info() != Eigen::Success) throw SingularError("dual system not positive definite");
    b = a.transpose() * llt.solve(rhs);
  }
  b0 = rbar - zbar.dot(b);
}

template <class T>
Vector<T> initial_mean(const FamilySpec& fam, const Vector<T>& y) {
  switch (fam.family) {
    case FamilyId::gaussian: return y;
    case FamilyId::binomial: return (y.array() + T(0.5)) / T(2);
    case FamilyId::poisson: return y.array() + T(0.1);
  }
  return y;
}

}  // namespace detail

/// Fits an L2-penalized GLM by iteratively reweighted least squares,
/// minimizing deviance/2 + (epsilon/2) |gamma|^2 with an unpenalized
/// intercept. Steps that increase the objective are halved up to
/// `max_halvings` times. Gaussian/identity is a single weighted solve.
///
/// Throws SingularError when epsilon is zero and the slopes are not
/// identifiable. A fit that fails to converge is returned with
/// converged == false rather than thrown.
template <class DerivedZ, class DerivedY>
GlmFit<typename DerivedZ::Scalar> fit_penalized_glm(const Eigen::MatrixBase<DerivedZ>& z,
                                                    const Eigen::MatrixBase<DerivedY>& y,
                                                    const FamilySpec& fam,
                                                    const GlmControl<typename DerivedZ::Scalar>& ctl = {}) {
  using T = typename DerivedZ::Scalar;
  fam.validate();
  const Index n = z.rows();
  const Index m = z.cols();
  if (n < 1) throw InsufficientDataError("GLM fit needs at least one observation");
  if (y.size() != n) throw ConfigError("GLM fit: response length does not match design rows");
  if (ctl.epsilon < 0) throw ConfigError("GLM fit: epsilon must be non-negative");
  for (Index i = 0; i < n; ++i) detail::check_response(fam, T(y(i)), i);

  const Vector<T> yv = y;
  const Matrix<T> zm = z;
  auto objective = [&](T dev, const Vector<T>& g) { return dev / 2 + ctl.epsilon / 2 * g.squaredNorm(); };

  GlmFit<T> fit;
  Vector<T> mu = detail::initial_mean(fam, yv);
  Vector<T> eta = link_eval(fam, mu);

  if (fam.family == FamilyId::gaussian) {
    Vector<T> g;
    T g0 = 0;
    detail::weighted_ridge_step(zm, Vector<T>::Ones(n).eval(), yv, ctl.epsilon, g0, g);
    mu = (zm * g).array() + g0;
    fit.intercept = g0;
    fit.coefficients = std::move(g);
    fit.deviance = deviance_eval(fam, yv, mu);
    fit.objective_trace.push_back(objective(fit.deviance, fit.coefficients));
    fit.iterations = 1;
    fit.converged = std::isfinite(fit.deviance);
    return fit;
  }

  bool have_iterate = false;
  T prev_dev = std::numeric_limits<T>::infinity();
  T prev_obj = std::numeric_limits<T>::infinity();
  T g0 = 0;
  Vector<T> g = Vector<T>::Zero(m);

  for (int iter = 1; iter <= ctl.max_iter; ++iter) {
    fit.iterations = iter;
    Vector<T> w(n), r(n);
    for (Index i = 0; i < n; ++i) {
      const T d = detail::mu_eta_scalar(fam, mu(i));
      w(i) = d * d / detail::variance_scalar(fam, mu(i));
      r(i) = eta(i) + (yv(i) - mu(i)) / d;
    }
    T new_g0 = 0;
    Vector<T> new_g;
    detail::weighted_ridge_step(zm, w, r, ctl.epsilon, new_g0, new_g);

    auto evaluate = [&](T b0, const Vector<T>& b, Vector<T>& eta_out, Vector<T>& mu_out, T& dev_out) {
      eta_out = (zm * b).array() + b0;
      if (!eta_out.allFinite()) return std::numeric_limits<T>::infinity();
      mu_out.resize(n);
      for (Index i = 0; i < n; ++i) mu_out(i) = detail::linkinv_scalar(fam, eta_out(i));
      dev_out = deviance_eval(fam, yv, mu_out);
      return std::isfinite(dev_out) ? objective(dev_out, b) : std::numeric_limits<T>::infinity();
    };

    Vector<T> new_eta, new_mu;
    T new_dev = 0;
    T new_obj = evaluate(new_g0, new_g, new_eta, new_mu, new_dev);

    if (have_iterate && !(new_obj <= prev_obj * (T(1) + T(1e-14)))) {
      bool accepted = false;
      for (int h = 0; h < ctl.max_halvings; ++h) {
        new_g0 = (new_g0 + g0) / 2;
        new_g = (new_g + g) / 2;
        new_obj = evaluate(new_g0, new_g, new_eta, new_mu, new_dev);
        if (new_obj <= prev_obj) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        // No descent from the current iterate: converged only if already stationary.
        fit.converged = std::isfinite(new_obj) &&
                        std::abs(new_obj - prev_obj) / (std::abs(prev_obj) + T(0.1)) < ctl.tol;
        break;
      }
    } else if (!std::isfinite(new_obj)) {
      fit.converged = false;
      break;
    }

    g0 = new_g0;
    g = std::move(new_g);
    eta = std::move(new_eta);
    mu = std::move(new_mu);
    fit.objective_trace.push_back(new_obj);
    const T change = std::abs(new_dev - prev_dev) / (std::abs(new_dev) + T(0.1));
    prev_dev = new_dev;
    prev_obj = new_obj;
    have_iterate = true;
    fit.intercept = g0;
    fit.coefficients = g;
    fit.deviance = new_dev;
    if (change < ctl.tol) {
      fit.converged = true;
      break;
    }
  }
  if (!have_iterate) {
    fit.intercept = null_eta(fam, yv);
    fit.coefficients = Vector<T>::Zero(m);
    fit.deviance = deviance_eval(fam, yv, linkinv_eval(fam, Vector<T>::Constant(n, fit.intercept)));
  }
  return fit;
}

/// Marginal-model fit on a projected design. All-zero columns (empty rows of
/// a sparse embedding) are dropped and get coefficient 0; if the reduced
/// unpenalized system is still singular it is refit with `fallback_epsilon`.
template <class DerivedZ, class DerivedY>
GlmFit<typename DerivedZ::Scalar> fit_marginal_glm(const Eigen::MatrixBase<DerivedZ>& z,
                                                   const Eigen::MatrixBase<DerivedY>& y, const FamilySpec& fam,
                                                   const GlmControl<typename DerivedZ::Scalar>& ctl,
                                                   typename DerivedZ::Scalar fallback_epsilon) {
  using T = typename DerivedZ::Scalar;
  std::vector<Index> keep;
  for (Index j = 0; j < z.cols(); ++j) {
    if ((z.col(j).array() != T(0)).any()) keep.push_back(j);
  }
  Matrix<T> reduced(z.rows(), static_cast<Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) reduced.col(static_cast<Index>(c)) = z.col(keep[c]);

  GlmFit<T> fit;
  try {
    fit = fit_penalized_glm(reduced, y, fam, ctl);
  } catch (const SingularError&) {
    if (!(fallback_epsilon > ctl.epsilon)) throw;
    GlmControl<T> retry = ctl;
    retry.epsilon = fallback_epsilon;
    fit = fit_penalized_glm(reduced, y, fam, retry);
  }
  Vector<T> full = Vector<T>::Zero(z.cols());
  for (std::size_t c = 0; c < keep.size(); ++c) full(keep[c]) = fit.coefficients(static_cast<Index>(c));
  fit.coefficients = std::move(full);
  return fit;
}

}  // namespace spar
