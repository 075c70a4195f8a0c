#include "spar/screening.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spar/errors.hpp"
#include "spar/glm.hpp"
#include "spar/parallel.hpp"

namespace spar {

std::string screen_method_name(ScreenMethod m) {
  switch (m) {
    case ScreenMethod::cor: return "cor";
    case ScreenMethod::marglik: return "marglik";
    case ScreenMethod::ridge: return "ridge";
    case ScreenMethod::plugin: return "plugin";
  }
  return "unknown";
}

ScreenMethod screen_method_from_name(const std::string& name) {
  if (name == "cor") return ScreenMethod::cor;
  if (name == "marglik") return ScreenMethod::marglik;
  if (name == "ridge" || name == "glmnet") return ScreenMethod::ridge;
  if (name == "plugin") return ScreenMethod::plugin;
  throw ConfigError("unknown screening method '" + name + "'");
}

void ScreenSpec::validate() const {
  if (nscreen && *nscreen < 1) throw ConfigError("nscreen must be at least 1");
  if (split_data_prop && !(*split_data_prop > 0.0 && *split_data_prop < 1.0))
    throw ConfigError("split_data_prop must lie strictly between 0 and 1");
  if (epsilon && *epsilon < 0) throw ConfigError("screening epsilon must be non-negative");
  if (method == ScreenMethod::plugin && !ScreeningRegistry::instance().contains(plugin_name))
    throw ConfigError("no screening plugin registered as '" + plugin_name + "'");
}

ScreeningRegistry& ScreeningRegistry::instance() {
  static ScreeningRegistry registry;
  return registry;
}

void ScreeningRegistry::add(const std::string& name, ScreeningPlugin fn) { plugins_[name] = std::move(fn); }

const ScreeningPlugin& ScreeningRegistry::get(const std::string& name) const {
  auto it = plugins_.find(name);
  if (it == plugins_.end()) throw ConfigError("no screening plugin registered as '" + name + "'");
  return it->second;
}

bool ScreeningRegistry::contains(const std::string& name) const { return plugins_.count(name) > 0; }

IndexSet constant_columns(const MatrixXd& x) {
  IndexSet out;
  for (Index j = 0; j < x.cols(); ++j) {
    if (x.rows() == 0 || (x.col(j).array() == x(0, j)).all()) out.push_back(j);
  }
  return out;
}

namespace {

void require_rows(const MatrixXd& x, const VectorXd& y) {
  if (x.rows() < 3) throw InsufficientDataError("screening needs at least 3 observations");
  if (y.size() != x.rows()) throw ConfigError("screening: response length does not match rows");
}

ScreeningResult finish(VectorXd omega, IndexSet excluded, ScreenMethod method) {
  for (Index j : excluded) omega(j) = 0.0;
  for (Index j = 0; j < omega.size(); ++j) {
    if (!std::isfinite(omega(j))) throw NumericalError("non-finite screening coefficient at column " + std::to_string(j));
  }
  ScreeningResult out;
  out.omega = std::move(omega);
  out.excluded = std::move(excluded);
  out.method = method;
  return out;
}

bool is_constant(const VectorXd& y) { return y.size() == 0 || (y.array() == y(0)).all(); }

}  // namespace

ScreeningResult screen_cor(const MatrixXd& x, const VectorXd& y) {
  require_rows(x, y);
  IndexSet excluded = constant_columns(x);
  VectorXd omega = VectorXd::Zero(x.cols());
  if (!is_constant(y)) {
    const VectorXd yc = y.array() - y.mean();
    const double ynorm = yc.norm();
    for (Index j = 0; j < x.cols(); ++j) {
      const VectorXd xc = x.col(j).array() - x.col(j).mean();
      const double xnorm = xc.norm();
      if (xnorm > 0) omega(j) = std::clamp(xc.dot(yc) / (xnorm * ynorm), -1.0, 1.0);
    }
  }
  return finish(std::move(omega), std::move(excluded), ScreenMethod::cor);
}

ScreeningResult screen_marglik(const MatrixXd& x, const VectorXd& y, const FamilySpec& fam, double epsilon,
                               int threads) {
  require_rows(x, y);
  IndexSet excluded = constant_columns(x);
  VectorXd omega = VectorXd::Zero(x.cols());
  std::vector<char> failed(static_cast<std::size_t>(x.cols()), 0);
  if (!is_constant(y)) {
    std::vector<char> skip(static_cast<std::size_t>(x.cols()), 0);
    for (Index j : excluded) skip[static_cast<std::size_t>(j)] = 1;
    GlmControl<double> ctl;
    ctl.epsilon = epsilon;
    parallel_for(static_cast<std::size_t>(x.cols()), threads, [&](std::size_t j) {
      if (skip[j]) return;
      try {
        const auto fit = fit_penalized_glm(x.col(static_cast<Index>(j)), y, fam, ctl);
        if (fit.converged) {
          omega(static_cast<Index>(j)) = fit.coefficients(0);
        } else {
          failed[j] = 1;
        }
      } catch (const SingularError&) {
        failed[j] = 1;
      }
    });
  }
  auto out = finish(std::move(omega), std::move(excluded), ScreenMethod::marglik);
  out.nonconverged = static_cast<int>(std::count(failed.begin(), failed.end(), 1));
  return out;
}

ScreeningResult screen_ridge(const MatrixXd& x, const VectorXd& y, const FamilySpec& fam,
                             std::optional<double> epsilon) {
  require_rows(x, y);
  IndexSet excluded = constant_columns(x);
  VectorXd omega = VectorXd::Zero(x.cols());
  if (!is_constant(y)) {
    GlmControl<double> ctl;
    ctl.epsilon = epsilon ? *epsilon : 1e-2 * static_cast<double>(x.rows());
    const auto fit = fit_penalized_glm(x, y, fam, ctl);
    omega = fit.coefficients;
  }
  return finish(std::move(omega), std::move(excluded), ScreenMethod::ridge);
}

ScreeningResult compute_screening(const MatrixXd& x, const VectorXd& y, const FamilySpec& fam,
                                  const ScreenSpec& spec, int threads) {
  spec.validate();
  switch (spec.method) {
    case ScreenMethod::cor:
      return screen_cor(x, y);
    case ScreenMethod::marglik:
      return screen_marglik(x, y, fam, spec.epsilon.value_or(0.0), threads);
    case ScreenMethod::ridge:
      return screen_ridge(x, y, fam, spec.epsilon);
    case ScreenMethod::plugin: {
      require_rows(x, y);
      VectorXd omega = ScreeningRegistry::instance().get(spec.plugin_name)(x, y, spec.controls);
      if (omega.size() != x.cols())
        throw ConfigError("screening plugin '" + spec.plugin_name + "' returned a vector of wrong length");
      if (!omega.allFinite())
        throw ConfigError("screening plugin '" + spec.plugin_name + "' returned non-finite values");
      return finish(std::move(omega), constant_columns(x), ScreenMethod::plugin);
    }
  }
  throw ConfigError("unhandled screening method");
}

IndexSet select_screened(const ScreeningResult& sr, Index nscreen, SelectionType type, Rng& rng) {
  const Index p = sr.omega.size();
  std::vector<char> excluded(static_cast<std::size_t>(p), 0);
  for (Index j : sr.excluded) excluded[static_cast<std::size_t>(j)] = 1;
  IndexSet candidates;
  candidates.reserve(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) {
    if (!excluded[static_cast<std::size_t>(j)]) candidates.push_back(j);
  }
  if (nscreen >= static_cast<Index>(candidates.size())) return candidates;
  const auto take = static_cast<std::size_t>(std::max<Index>(nscreen, 0));

  IndexSet chosen;
  if (type == SelectionType::fixed) {
    std::stable_sort(candidates.begin(), candidates.end(), [&](Index a, Index b) {
      return std::abs(sr.omega(a)) > std::abs(sr.omega(b));
    });
    chosen.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take));
  } else {
    // Keys log(u)/w order identically to u^(1/w) and avoid underflow.
    std::vector<std::pair<double, Index>> keyed;
    IndexSet zero_weight;
    for (Index j : candidates) {
      const double u = open_unit(rng);
      const double w = std::abs(sr.omega(j));
      if (w > 0) {
        keyed.emplace_back(std::log(u) / w, j);
      } else {
        zero_weight.push_back(j);
      }
    }
    const std::size_t from_keyed = std::min(take, keyed.size());
    std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(from_keyed), keyed.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    for (std::size_t i = 0; i < from_keyed; ++i) chosen.push_back(keyed[i].second);
    if (chosen.size() < take) {
      std::shuffle(zero_weight.begin(), zero_weight.end(), rng);
      zero_weight.resize(take - chosen.size());
      chosen.insert(chosen.end(), zero_weight.begin(), zero_weight.end());
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

RowSplit split_for_screening(Index n, std::optional<double> split_data_prop, Rng& rng) {
  RowSplit split;
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  if (!split_data_prop) {
    split.screen_rows = rows;
    split.model_rows = std::move(rows);
    return split;
  }
  const double prop = *split_data_prop;
  if (!(prop > 0.0 && prop < 1.0)) throw ConfigError("split_data_prop must lie strictly between 0 and 1");
  const auto n_screen = static_cast<Index>(std::llround(prop * static_cast<double>(n)));
  if (n_screen < 3 || n - n_screen < 3)
    throw ConfigError("split_data_prop leaves fewer than 3 rows for screening or model fitting");
  std::shuffle(rows.begin(), rows.end(), rng);
  split.screen_rows.assign(rows.begin(), rows.begin() + n_screen);
  split.model_rows.assign(rows.begin() + n_screen, rows.end());
  std::sort(split.screen_rows.begin(), split.screen_rows.end());
  std::sort(split.model_rows.begin(), split.model_rows.end());
  return split;
}

}  // namespace spar
