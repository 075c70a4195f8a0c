#include "spar/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "spar/errors.hpp"
#include "spar/glm.hpp"
#include "spar/parallel.hpp"

namespace spar {

std::string measure_name(Measure m) {
  switch (m) {
    case Measure::deviance: return "deviance";
    case Measure::mse: return "mse";
    case Measure::mae: return "mae";
    case Measure::misclassification: return "class";
    case Measure::one_minus_auc: return "1-auc";
  }
  return "unknown";
}

Measure measure_from_name(const std::string& name) {
  if (name == "deviance") return Measure::deviance;
  if (name == "mse") return Measure::mse;
  if (name == "mae") return Measure::mae;
  if (name == "class") return Measure::misclassification;
  if (name == "1-auc") return Measure::one_minus_auc;
  throw ConfigError("unknown measure '" + name + "'");
}

void SparConfig::validate() const {
  family.validate();
  screen.validate();
  rp.validate();
  if (nus.empty() && nnu < 1) throw ConfigError("nnu must be at least 1");
  if (nummods.empty()) throw ConfigError("nummods must not be empty");
  for (Index m : nummods) {
    if (m < 1) throw ConfigError("every nummod must be at least 1");
  }
  for (double nu : nus) {
    if (!(nu >= 0.0) || !std::isfinite(nu)) throw ConfigError("thresholds must be finite and non-negative");
  }
  if ((measure == Measure::misclassification || measure == Measure::one_minus_auc) &&
      family.family != FamilyId::binomial)
    throw ConfigError("measure '" + measure_name(measure) + "' needs the binomial family");
  if (model.max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (!(model.tol > 0.0)) throw ConfigError("tol must be positive");
  if (model.epsilon && *model.epsilon < 0) throw ConfigError("model epsilon must be non-negative");
  if (threads < 0) throw ConfigError("threads must be non-negative");
}

Index SparConfig::max_nummod() const { return *std::max_element(nummods.begin(), nummods.end()); }

Standardized standardize(const MatrixXd& x, const VectorXd& y, const FamilySpec& fam) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (n < 3) throw InsufficientDataError("standardization needs at least 3 observations");
  if (y.size() != n) throw ConfigError("response length does not match predictor rows");
  Standardized out;
  out.stats.x_mean = x.colwise().mean();
  out.stats.x_sd = VectorXd::Ones(p);
  out.x.resize(n, p);
  for (Index j = 0; j < p; ++j) {
    if ((x.col(j).array() == x(0, j)).all()) {
      out.stats.constant_cols.push_back(j);
      out.stats.x_mean(j) = x(0, j);
      out.x.col(j).setZero();
      continue;
    }
    const VectorXd centered = x.col(j).array() - out.stats.x_mean(j);
    const double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(n - 1));
    out.stats.x_sd(j) = sd;
    out.x.col(j) = centered / sd;
  }
  if (fam.family == FamilyId::gaussian) {
    out.stats.y_mean = y.mean();
    const double sd = std::sqrt((y.array() - out.stats.y_mean).square().sum() / static_cast<double>(n - 1));
    out.stats.y_sd = sd > 0 ? sd : 1.0;
    out.y = (y.array() - out.stats.y_mean) / out.stats.y_sd;
  } else {
    out.stats.y_mean = 0.0;
    out.stats.y_sd = 1.0;
    out.y = y;
  }
  return out;
}

SparseVector<double> backproject(const ProjectionMatrix& phi, const VectorXd& gamma, const IndexSet& indices, Index p) {
  const VectorXd local = phi.transpose_times(gamma);
  SparseVector<double> beta(p);
  beta.reserve(static_cast<Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    const double v = local(static_cast<Index>(c));
    if (v != 0.0) beta.insertBack(indices[c]) = v;
  }
  return beta;
}

namespace {

MatrixXd rows_of(const MatrixXd& x, const std::vector<Index>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(rows[i]);
  return out;
}

VectorXd rows_of(const VectorXd& y, const std::vector<Index>& rows) {
  VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = y(rows[i]);
  return out;
}

}  // namespace

EnsembleFit fit_ensemble(const MatrixXd& x_std, const VectorXd& y_std, const SparConfig& cfg, Index count,
                         std::uint64_t seed, const FrozenProjections* frozen, const IndexSet& constant_cols) {
  cfg.validate();
  const Index n = x_std.rows();
  const Index p = x_std.cols();
  if (y_std.size() != n) throw ConfigError("response length does not match predictor rows");
  if (count < 1) throw ConfigError("ensemble needs at least one model");
  if (frozen) {
    if (static_cast<Index>(frozen->indices.size()) < count || static_cast<Index>(frozen->projections.size()) < count)
      throw ConfigError("supplied index sets and projections must cover every model");
    for (Index k = 0; k < count; ++k) {
      const auto& idx = frozen->indices[static_cast<std::size_t>(k)];
      if (static_cast<Index>(idx.size()) != frozen->projections[static_cast<std::size_t>(k)].cols())
        throw ConfigError("supplied projection " + std::to_string(k) + " does not match its index set");
      for (Index j : idx) {
        if (j < 0 || j >= p) throw ConfigError("supplied index out of range");
      }
    }
  }

  EnsembleFit out;
  Rng split_rng = make_stream(seed, Stream::row_split);
  const RowSplit split = split_for_screening(n, cfg.screen.split_data_prop, split_rng);
  const bool split_rows = cfg.screen.split_data_prop.has_value();
  const MatrixXd x_model = split_rows ? rows_of(x_std, split.model_rows) : MatrixXd();
  const VectorXd y_model = split_rows ? rows_of(y_std, split.model_rows) : VectorXd();
  const MatrixXd& xm = split_rows ? x_model : x_std;
  const VectorXd& ym = split_rows ? y_model : y_std;

  const bool needs_screening =
      !frozen || (frozen->refresh_data && cfg.rp.kind == RpKind::cw && cfg.rp.data_driven);
  if (needs_screening) {
    if (split_rows) {
      out.screening = compute_screening(rows_of(x_std, split.screen_rows), rows_of(y_std, split.screen_rows),
                                        cfg.family, cfg.screen, cfg.threads);
    } else {
      out.screening = compute_screening(x_std, y_std, cfg.family, cfg.screen, cfg.threads);
    }
    IndexSet merged = out.screening.excluded;
    merged.insert(merged.end(), constant_cols.begin(), constant_cols.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    for (Index j : merged) out.screening.omega(j) = 0.0;
    out.screening.excluded = std::move(merged);
    if (out.screening.nonconverged > 0)
      out.warnings.push_back(std::to_string(out.screening.nonconverged) +
                             " screening fits did not converge; their coefficients were set to 0");
  }

  const Index nscreen = cfg.screen.nscreen.value_or(2 * n);
  const auto [mslow, msup] = goal_dim_bounds(cfg.rp, n, p);
  std::vector<Index> dims;
  if (!frozen) {
    Rng dims_rng = make_stream(seed, Stream::goal_dims);
    dims = draw_goal_dims(count, mslow, msup, dims_rng);
  }
  const double eps = cfg.model.resolved_epsilon(cfg.family, xm.rows());
  const double fallback = std::max(eps, 1e-4 * static_cast<double>(xm.rows()));
  GlmControl<double> ctl;
  ctl.epsilon = eps;
  ctl.max_iter = cfg.model.max_iter;
  ctl.tol = cfg.model.tol;

  ProjectionData data;
  data.x = &xm;
  data.y = &ym;
  data.omega = needs_screening ? &out.screening.omega : nullptr;
  data.family = cfg.family;
  data.epsilon = eps;

  out.models.resize(static_cast<std::size_t>(count));
  parallel_for(static_cast<std::size_t>(count), cfg.threads, [&](std::size_t k) {
    MarginalModel& model = out.models[k];
    if (frozen) {
      model.indices = frozen->indices[k];
      model.projection = (frozen->refresh_data && needs_screening)
                             ? refresh_projection(cfg.rp, frozen->projections[k], model.indices, out.screening.omega)
                             : frozen->projections[k];
    } else {
      Rng screen_rng = make_stream(seed, Stream::screening, k);
      model.indices = select_screened(out.screening, nscreen, cfg.screen.selection_type, screen_rng);
      Rng proj_rng = make_stream(seed, Stream::projection, k);
      model.projection = generate_projection(cfg.rp, dims[k], model.indices, data, proj_rng);
    }
    model.m = model.projection.rows();
    try {
      const MatrixXd z = project(select_columns(xm, model.indices), model.projection);
      const auto fit = fit_marginal_glm(z, ym, cfg.family, ctl, fallback);
      model.converged = fit.converged;
      if (fit.converged) {
        model.gamma0 = fit.intercept;
        model.gamma = fit.coefficients;
      }
    } catch (const SparError&) {
      model.converged = false;
    }
    if (!model.converged) {
      model.gamma0 = null_eta(cfg.family, ym);
      model.gamma = VectorXd::Zero(model.m);
    }
    model.beta = backproject(model.projection, model.gamma, model.indices, p);
  });

  const auto failed = std::count_if(out.models.begin(), out.models.end(), [](const auto& m) { return !m.converged; });
  if (failed == count) throw NumericalError("every marginal model failed to fit");
  if (failed > 0)
    out.warnings.push_back(std::to_string(failed) + " marginal models did not converge and contribute zero coefficients");
  return out;
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw ConfigError("quantile of an empty set");
  const double h = static_cast<double>(sorted.size() - 1) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> build_nu_grid(std::span<const MarginalModel> models, Index nnu,
                                  const std::vector<double>& explicit_nus, std::vector<std::string>* warnings) {
  std::vector<double> grid;
  if (!explicit_nus.empty()) {
    grid = explicit_nus;
  } else {
    if (nnu < 1) throw ConfigError("nnu must be at least 1");
    std::vector<double> magnitudes;
    for (const auto& m : models) {
      for (SparseVector<double>::InnerIterator it(m.beta); it; ++it) {
        if (it.value() != 0.0) magnitudes.push_back(std::abs(it.value()));
      }
    }
    grid.push_back(0.0);
    if (magnitudes.empty()) {
      if (warnings) warnings->push_back("all marginal coefficients are zero; threshold grid is {0}");
    } else {
      std::sort(magnitudes.begin(), magnitudes.end());
      for (Index i = 1; i < nnu; ++i) {
        grid.push_back(quantile_sorted(magnitudes, static_cast<double>(i) / static_cast<double>(nnu)));
      }
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

SparseVector<double> threshold_beta(const SparseVector<double>& beta, double nu) {
  SparseVector<double> out(beta.size());
  for (SparseVector<double>::InnerIterator it(beta); it; ++it) {
    if (!(std::abs(it.value()) < nu)) out.insertBack(it.index()) = it.value();
  }
  return out;
}

StandardizedAverage average_standardized(std::span<const MarginalModel> models, double nu, Index nummod, Index p) {
  if (nummod < 1) throw ConfigError("nummod must be at least 1");
  if (nummod > static_cast<Index>(models.size())) throw ConfigError("nummod exceeds the number of fitted models");
  StandardizedAverage avg;
  avg.beta = VectorXd::Zero(p);
  for (Index k = 0; k < nummod; ++k) {
    const auto& model = models[static_cast<std::size_t>(k)];
    for (SparseVector<double>::InnerIterator it(model.beta); it; ++it) {
      if (!(std::abs(it.value()) < nu)) avg.beta(it.index()) += it.value();
    }
    avg.intercept += model.gamma0;
  }
  avg.beta /= static_cast<double>(nummod);
  avg.intercept /= static_cast<double>(nummod);
  return avg;
}

namespace {

// Maps standardized-scale (intercept, beta) to the original scale in place.
void destandardize(const StandardizationStats& stats, double& intercept, VectorXd& beta) {
  beta = beta.cwiseQuotient(stats.x_sd) * stats.y_sd;
  intercept = stats.y_mean + stats.y_sd * intercept - beta.dot(stats.x_mean);
}

void check_columns(const MatrixXd& x_new, Index p) {
  if (x_new.cols() != p)
    throw ConfigError("new data has " + std::to_string(x_new.cols()) + " columns, model expects " + std::to_string(p));
}

}  // namespace

Coefficients average_coefficients(std::span<const MarginalModel> models, const StandardizationStats& stats,
                                  const FamilySpec& fam, double nu, Index nummod) {
  (void)fam;  // y_sd/y_mean already carry the family-specific sentinels
  auto avg = average_standardized(models, nu, nummod, stats.x_mean.size());
  Coefficients c;
  c.intercept = avg.intercept;
  c.beta = std::move(avg.beta);
  destandardize(stats, c.intercept, c.beta);
  c.nu = nu;
  c.nummod = nummod;
  c.active = (c.beta.array() != 0.0).count();
  return c;
}

Coefficients coef(const SparEnsemble& ens, std::optional<double> nu, std::optional<Index> nummod, OptPar opt_par) {
  const GridChoice* chosen = &ens.best;
  if (!(nu && nummod) && opt_par == OptPar::one_se) {
    if (!ens.one_se) throw ConfigError("one-standard-error choice is only available after cross-validation");
    chosen = &*ens.one_se;
  }
  return average_coefficients(ens.models, ens.stats, ens.family, nu.value_or(chosen->nu),
                              nummod.value_or(chosen->nummod));
}

VectorXd predict(const Coefficients& c, const FamilySpec& fam, const MatrixXd& x_new, ResponseType type) {
  check_columns(x_new, c.beta.size());
  const VectorXd eta = (x_new * c.beta).array() + c.intercept;
  return type == ResponseType::link ? eta : linkinv_eval(fam, eta);
}

VectorXd predict_models(std::span<const MarginalModel> models, const StandardizationStats& stats,
                        const FamilySpec& fam, const MatrixXd& x_new, ResponseType type, AverageType avg_type,
                        double nu, Index nummod) {
  check_columns(x_new, stats.x_mean.size());
  if (avg_type == AverageType::link) {
    return predict(average_coefficients(models, stats, fam, nu, nummod), fam, x_new, type);
  }
  if (nummod < 1 || nummod > static_cast<Index>(models.size())) throw ConfigError("nummod out of range");
  VectorXd mean_mu = VectorXd::Zero(x_new.rows());
  for (Index k = 0; k < nummod; ++k) {
    const auto& model = models[static_cast<std::size_t>(k)];
    VectorXd beta = VectorXd(threshold_beta(model.beta, nu));
    double intercept = model.gamma0;
    destandardize(stats, intercept, beta);
    const VectorXd eta = (x_new * beta).array() + intercept;
    mean_mu += linkinv_eval(fam, eta);
  }
  mean_mu /= static_cast<double>(nummod);
  return type == ResponseType::response ? mean_mu : link_eval(fam, mean_mu);
}

VectorXd predict(const SparEnsemble& ens, const MatrixXd& x_new, ResponseType type, AverageType avg_type,
                 std::optional<double> nu, std::optional<Index> nummod, OptPar opt_par) {
  const GridChoice* chosen = &ens.best;
  if (!(nu && nummod) && opt_par == OptPar::one_se) {
    if (!ens.one_se) throw ConfigError("one-standard-error choice is only available after cross-validation");
    chosen = &*ens.one_se;
  }
  return predict_models(ens.models, ens.stats, ens.family, x_new, type, avg_type, nu.value_or(chosen->nu),
                        nummod.value_or(chosen->nummod));
}

namespace {

// 1 - AUC via midranks; equals pair counting with ties scored 1/2.
double one_minus_auc(const VectorXd& y, const VectorXd& score) {
  const Index n = y.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return score(a) < score(b); });
  std::vector<double> rank(static_cast<std::size_t>(n));
  for (Index i = 0; i < n;) {
    Index j = i;
    while (j + 1 < n && score(order[static_cast<std::size_t>(j + 1)]) == score(order[static_cast<std::size_t>(i)])) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Index t = i; t <= j; ++t) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])] = mid;
    i = j + 1;
  }
  double n_pos = 0.0, rank_sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (y(i) == 1.0) {
      n_pos += 1.0;
      rank_sum += rank[static_cast<std::size_t>(i)];
    }
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double auc = (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
  return 1.0 - auc;
}

}  // namespace

double eval_measure(Measure measure, const FamilySpec& fam, const VectorXd& y, const VectorXd& mu) {
  if (y.size() != mu.size()) throw ConfigError("measure: length mismatch");
  if (y.size() == 0) throw ConfigError("measure: empty input");
  const auto n = static_cast<double>(y.size());
  switch (measure) {
    case Measure::deviance:
      return deviance_eval(fam, y, mu);
    case Measure::mse:
      return (y - mu).squaredNorm() / n;
    case Measure::mae:
      return (y - mu).cwiseAbs().sum() / n;
    case Measure::misclassification: {
      if (fam.family != FamilyId::binomial) throw ConfigError("misclassification needs the binomial family");
      double wrong = 0.0;
      for (Index i = 0; i < y.size(); ++i) wrong += ((mu(i) > 0.5 ? 1.0 : 0.0) != y(i)) ? 1.0 : 0.0;
      return wrong / n;
    }
    case Measure::one_minus_auc:
      if (fam.family != FamilyId::binomial) throw ConfigError("1-auc needs the binomial family");
      return one_minus_auc(y, mu);
  }
  throw ConfigError("unhandled measure");
}

}  // namespace spar
