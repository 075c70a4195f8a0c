#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "spar/errors.hpp"
#include "spar/types.hpp"

namespace spar {

enum class FamilyId { gaussian, binomial, poisson };
enum class LinkId { identity, logit, log };

// Bounds applied to fitted means so IRLS weights stay finite.
inline constexpr double kMuClamp = 1e-10;

/// Exponential dispersion family with its canonical link.
struct FamilySpec {
  FamilyId family = FamilyId::gaussian;
  LinkId link = LinkId::identity;
  bool dispersion_known = false;

  static FamilySpec gaussian() { return {FamilyId::gaussian, LinkId::identity, false}; }
  static FamilySpec binomial() { return {FamilyId::binomial, LinkId::logit, true}; }
  static FamilySpec poisson() { return {FamilyId::poisson, LinkId::log, true}; }

  static FamilySpec from_name(std::string_view name) {
    if (name == "gaussian") return gaussian();
    if (name == "binomial") return binomial();
    if (name == "poisson") return poisson();
    throw ConfigError("unknown family '" + std::string(name) + "'");
  }

  /// Throws ConfigError for non-canonical pairs.
  void validate() const {
    const bool ok = (family == FamilyId::gaussian && link == LinkId::identity) ||
                    (family == FamilyId::binomial && link == LinkId::logit) ||
                    (family == FamilyId::poisson && link == LinkId::log);
    if (!ok) throw ConfigError("only canonical links are supported");
  }

  bool operator==(const FamilySpec&) const = default;
};

inline std::string family_name(FamilyId f) {
  switch (f) {
    case FamilyId::gaussian: return "gaussian";
    case FamilyId::binomial: return "binomial";
    case FamilyId::poisson: return "poisson";
  }
  return "unknown";
}

inline std::string link_name(LinkId l) {
  switch (l) {
    case LinkId::identity: return "identity";
    case LinkId::logit: return "logit";
    case LinkId::log: return "log";
  }
  return "unknown";
}

namespace detail {

template <class T>
T linkinv_scalar(const FamilySpec& fam, T eta) {
  switch (fam.family) {
    case FamilyId::gaussian:
      return eta;
    case FamilyId::binomial: {
      const T mu = eta >= 0 ? T(1) / (T(1) + std::exp(-eta))
                            : std::exp(eta) / (T(1) + std::exp(eta));
      return std::clamp(mu, T(kMuClamp), T(1) - T(kMuClamp));
    }
    case FamilyId::poisson:
      return std::max(std::exp(eta), T(kMuClamp));
  }
  return eta;
}

// d mu / d eta, evaluated at a (clamped) mean.
template <class T>
T mu_eta_scalar(const FamilySpec& fam, T mu) {
  switch (fam.family) {
    case FamilyId::gaussian: return T(1);
    case FamilyId::binomial: return mu * (T(1) - mu);
    case FamilyId::poisson: return mu;
  }
  return T(1);
}

template <class T>
T variance_scalar(const FamilySpec& fam, T mu) {
  switch (fam.family) {
    case FamilyId::gaussian: return T(1);
    case FamilyId::binomial: return mu * (T(1) - mu);
    case FamilyId::poisson: return mu;
  }
  return T(1);
}

// y * log(y / mu) with 0 log 0 := 0.
template <class T>
T ylogy_over(T y, T mu) {
  return y == T(0) ? T(0) : y * std::log(y / mu);
}

template <class T>
void check_response(const FamilySpec& fam, T y, Index i) {
  if (!std::isfinite(y)) throw DomainError("non-finite response", static_cast<long>(i));
  if (fam.family == FamilyId::binomial && (y < 0 || y > 1))
    throw DomainError("binomial response must lie in [0, 1]", static_cast<long>(i));
  if (fam.family == FamilyId::poisson && y < 0)
    throw DomainError("poisson response must be non-negative", static_cast<long>(i));
}

}  // namespace detail

/// g(mu), elementwise.
template <class Derived>
Vector<typename Derived::Scalar> link_eval(const FamilySpec& fam,
                                           const Eigen::MatrixBase<Derived>& mu) {
  using T = typename Derived::Scalar;
  Vector<T> eta(mu.size());
  for (Index i = 0; i < mu.size(); ++i) {
    const T m = mu(i);
    switch (fam.family) {
      case FamilyId::gaussian:
        if (!std::isfinite(m)) throw DomainError("non-finite mean", static_cast<long>(i));
        eta(i) = m;
        break;
      case FamilyId::binomial:
        if (!(m > 0 && m < 1)) throw DomainError("logit link needs 0 < mu < 1", static_cast<long>(i));
        eta(i) = std::log(m / (T(1) - m));
        break;
      case FamilyId::poisson:
        if (!(m > 0) || !std::isfinite(m))
          throw DomainError("log link needs mu > 0", static_cast<long>(i));
        eta(i) = std::log(m);
        break;
    }
  }
  return eta;
}

/// g^{-1}(eta), elementwise. Binomial means are clamped to
/// [1e-10, 1 - 1e-10] and poisson means floored at 1e-10.
template <class Derived>
Vector<typename Derived::Scalar> linkinv_eval(const FamilySpec& fam,
                                              const Eigen::MatrixBase<Derived>& eta) {
  using T = typename Derived::Scalar;
  Vector<T> mu(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    if (!std::isfinite(eta(i))) throw DomainError("non-finite linear predictor", static_cast<long>(i));
    mu(i) = detail::linkinv_scalar(fam, eta(i));
  }
  return mu;
}

/// Unit-dispersion GLM deviance summed over observations.
template <class DerivedY, class DerivedMu>
typename DerivedY::Scalar deviance_eval(const FamilySpec& fam, const Eigen::MatrixBase<DerivedY>& y,
                                        const Eigen::MatrixBase<DerivedMu>& mu) {
  using T = typename DerivedY::Scalar;
  if (y.size() != mu.size()) throw ConfigError("deviance: length mismatch");
  T dev = 0;
  for (Index i = 0; i < y.size(); ++i) {
    const T yi = y(i);
    const T mi = mu(i);
    detail::check_response(fam, yi, i);
    switch (fam.family) {
      case FamilyId::gaussian:
        dev += (yi - mi) * (yi - mi);
        break;
      case FamilyId::binomial:
        dev += T(2) * (detail::ylogy_over(yi, mi) + detail::ylogy_over(T(1) - yi, T(1) - mi));
        break;
      case FamilyId::poisson:
        dev += T(2) * (detail::ylogy_over(yi, mi) - (yi - mi));
        break;
    }
  }
  return std::max(dev, T(0));
}

/// Log-likelihood. Gaussian uses `dispersion` as sigma^2 when given and the
/// estimate RSS/n otherwise; the other families ignore it.
template <class DerivedY, class DerivedMu>
typename DerivedY::Scalar loglik_eval(const FamilySpec& fam, const Eigen::MatrixBase<DerivedY>& y,
                                      const Eigen::MatrixBase<DerivedMu>& mu,
                                      std::optional<typename DerivedY::Scalar> dispersion = {}) {
  using T = typename DerivedY::Scalar;
  if (y.size() != mu.size()) throw ConfigError("loglik: length mismatch");
  const auto n = static_cast<T>(y.size());
  T ll = 0;
  switch (fam.family) {
    case FamilyId::gaussian: {
      T rss = 0;
      for (Index i = 0; i < y.size(); ++i) {
        detail::check_response(fam, y(i), i);
        rss += (y(i) - mu(i)) * (y(i) - mu(i));
      }
      const T sigma2 = dispersion ? *dispersion : rss / n;
      if (!(sigma2 > 0)) return rss == 0 ? std::numeric_limits<T>::infinity() : T(0);
      const T pi2 = T(2) * T(3.14159265358979323846);
      ll = -T(0.5) * n * std::log(pi2 * sigma2) - rss / (T(2) * sigma2);
      break;
    }
    case FamilyId::binomial:
      for (Index i = 0; i < y.size(); ++i) {
        detail::check_response(fam, y(i), i);
        if (y(i) > 0) ll += y(i) * std::log(mu(i));
        if (y(i) < 1) ll += (T(1) - y(i)) * std::log(T(1) - mu(i));
      }
      break;
    case FamilyId::poisson:
      for (Index i = 0; i < y.size(); ++i) {
        detail::check_response(fam, y(i), i);
        ll += -mu(i) - std::lgamma(y(i) + T(1));
        if (y(i) > 0) ll += y(i) * std::log(mu(i));
      }
      break;
  }
  return ll;
}

/// Intercept-only fitted mean on the link scale, g(mean(y)) with clamping.
template <class Derived>
typename Derived::Scalar null_eta(const FamilySpec& fam, const Eigen::MatrixBase<Derived>& y) {
  using T = typename Derived::Scalar;
  T m = y.size() > 0 ? y.mean() : T(0);
  switch (fam.family) {
    case FamilyId::gaussian: return m;
    case FamilyId::binomial:
      m = std::clamp(m, T(kMuClamp), T(1) - T(kMuClamp));
      return std::log(m / (T(1) - m));
    case FamilyId::poisson: return std::log(std::max(m, T(kMuClamp)));
  }
  return m;
}

}  // namespace spar
