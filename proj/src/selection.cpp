#include "spar/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "spar/errors.hpp"
#include "spar/parallel.hpp"

namespace spar {

SelectionGrid evaluate_grid(std::span<const MarginalModel> models, const StandardizationStats& stats,
                            const FamilySpec& fam, const MatrixXd& x_eval, const VectorXd& y_eval, Measure measure,
                            const std::vector<double>& nus, const std::vector<Index>& nummods, int threads) {
  if (x_eval.rows() != y_eval.size()) throw ConfigError("evaluation data: response length does not match rows");
  SelectionGrid grid;
  grid.nus = nus;
  grid.nummods = nummods;
  grid.cells.resize(nus.size() * nummods.size());
  parallel_for(grid.cells.size(), threads, [&](std::size_t c) {
    GridCell& cell = grid.cells[c];
    cell.nu = nus[c / nummods.size()];
    cell.nummod = nummods[c % nummods.size()];
    const Coefficients coefs = average_coefficients(models, stats, fam, cell.nu, cell.nummod);
    cell.active = coefs.active;
    cell.measure = eval_measure(measure, fam, y_eval, predict(coefs, fam, x_eval, ResponseType::response));
    cell.se = 0.0;
  });
  return grid;
}

namespace {

// True when a should be preferred over b at equal measure.
bool sparser_tiebreak(const GridCell& a, const GridCell& b) {
  if (a.nu != b.nu) return a.nu > b.nu;
  return a.nummod < b.nummod;
}

GridChoice to_choice(const GridCell& c) { return {c.nu, c.nummod, c.measure, c.se, c.active}; }

}  // namespace

GridChoice argmin_cell(const SelectionGrid& grid) {
  const GridCell* best = nullptr;
  for (const auto& cell : grid.cells) {
    if (std::isnan(cell.measure)) continue;
    if (!best || cell.measure < best->measure || (cell.measure == best->measure && sparser_tiebreak(cell, *best)))
      best = &cell;
  }
  if (!best) throw NumericalError("every grid cell has an undefined measure");
  return to_choice(*best);
}

GridChoice one_se_rule(const SelectionGrid& grid) {
  const GridChoice best = argmin_cell(grid);
  const double bound = best.measure + best.se;
  const GridCell* pick = nullptr;
  for (const auto& cell : grid.cells) {
    if (std::isnan(cell.measure) || !(cell.measure <= bound)) continue;
    if (!pick || cell.active < pick->active || (cell.active == pick->active && sparser_tiebreak(cell, *pick)))
      pick = &cell;
  }
  return to_choice(*pick);
}

ValidationSelection select_on_validation(std::span<const MarginalModel> models, const StandardizationStats& stats,
                                         const FamilySpec& fam, const MatrixXd& x_val, const VectorXd& y_val,
                                         Measure measure, const std::vector<double>& nus,
                                         const std::vector<Index>& nummods, int threads) {
  ValidationSelection out;
  out.grid = evaluate_grid(models, stats, fam, x_val, y_val, measure, nus, nummods, threads);
  out.best = argmin_cell(out.grid);
  return out;
}

SparEnsemble fit_spar(const MatrixXd& x, const VectorXd& y, const SparConfig& cfg, const MatrixXd* x_val,
                      const VectorXd* y_val, const FrozenProjections* frozen) {
  cfg.validate();
  if ((x_val == nullptr) != (y_val == nullptr)) throw ConfigError("validation predictors and response go together");
  const Standardized data = standardize(x, y, cfg.family);
  SparEnsemble ens;
  ens.family = cfg.family;
  ens.stats = data.stats;
  ens.config = cfg;
  ens.seed = cfg.seed;
  ens.nummods = cfg.nummods;
  std::sort(ens.nummods.begin(), ens.nummods.end());
  ens.nummods.erase(std::unique(ens.nummods.begin(), ens.nummods.end()), ens.nummods.end());

  EnsembleFit fit =
      fit_ensemble(data.x, data.y, cfg, cfg.max_nummod(), cfg.seed, frozen, data.stats.constant_cols);
  ens.models = std::move(fit.models);
  ens.warnings = std::move(fit.warnings);
  ens.nus = build_nu_grid(ens.models, cfg.nnu, cfg.nus, &ens.warnings);

  const MatrixXd& xv = x_val ? *x_val : x;
  const VectorXd& yv = y_val ? *y_val : y;
  if (!x_val) ens.warnings.push_back("no validation data given; thresholds were selected on the training data");
  auto sel = select_on_validation(ens.models, ens.stats, ens.family, xv, yv, cfg.measure, ens.nus, ens.nummods,
                                  cfg.threads);
  ens.grid = std::move(sel.grid);
  ens.best = sel.best;
  return ens;
}

std::vector<std::vector<Index>> make_folds(const VectorXd& y, const FamilySpec& fam, Index nfolds,
                                           std::uint64_t seed) {
  const Index n = y.size();
  if (nfolds < 2) throw ConfigError("nfolds must be at least 2");
  if (nfolds > n) throw ConfigError("nfolds must not exceed the number of observations");
  const Index largest = (n + nfolds - 1) / nfolds;
  if (n - largest < 3) throw ConfigError("each training split needs at least 3 observations");

  Rng rng = make_stream(seed, Stream::folds);
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(n));
  if (fam.family == FamilyId::binomial) {
    std::vector<Index> pos, neg;
    for (Index i = 0; i < n; ++i) (y(i) == 1.0 ? pos : neg).push_back(i);
    std::shuffle(neg.begin(), neg.end(), rng);
    std::shuffle(pos.begin(), pos.end(), rng);
    order = std::move(neg);
    order.insert(order.end(), pos.begin(), pos.end());
  } else {
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<std::vector<Index>> folds(static_cast<std::size_t>(nfolds));
  for (std::size_t i = 0; i < order.size(); ++i) folds[i % folds.size()].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

namespace {

MatrixXd take_rows(const MatrixXd& x, const std::vector<Index>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(rows[i]);
  return out;
}

VectorXd take_rows(const VectorXd& y, const std::vector<Index>& rows) {
  VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = y(rows[i]);
  return out;
}

std::vector<Index> complement(Index n, const std::vector<Index>& rows) {
  std::vector<char> held(static_cast<std::size_t>(n), 0);
  for (Index r : rows) held[static_cast<std::size_t>(r)] = 1;
  std::vector<Index> out;
  for (Index i = 0; i < n; ++i) {
    if (!held[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

}  // namespace

CvResult cross_validate(const MatrixXd& x, const VectorXd& y, const SparConfig& cfg, Index nfolds) {
  cfg.validate();
  const Index n = x.rows();
  if (y.size() != n) throw ConfigError("response length does not match predictor rows");

  CvResult out;
  out.folds = make_folds(y, cfg.family, nfolds, cfg.seed);

  // Full-data fit fixes index sets, projections and the threshold grid.
  const Standardized full = standardize(x, y, cfg.family);
  SparEnsemble& ens = out.ensemble;
  ens.family = cfg.family;
  ens.stats = full.stats;
  ens.config = cfg;
  ens.seed = cfg.seed;
  ens.nummods = cfg.nummods;
  std::sort(ens.nummods.begin(), ens.nummods.end());
  ens.nummods.erase(std::unique(ens.nummods.begin(), ens.nummods.end()), ens.nummods.end());
  const Index count = cfg.max_nummod();
  EnsembleFit fit = fit_ensemble(full.x, full.y, cfg, count, cfg.seed, nullptr, full.stats.constant_cols);
  ens.models = std::move(fit.models);
  ens.warnings = std::move(fit.warnings);
  ens.nus = build_nu_grid(ens.models, cfg.nnu, cfg.nus, &ens.warnings);

  FrozenProjections frozen;
  frozen.refresh_data = true;
  for (const auto& m : ens.models) {
    frozen.indices.push_back(m.indices);
    frozen.projections.push_back(m.projection);
  }

  const std::size_t n_cells = ens.nus.size() * ens.nummods.size();
  const std::size_t k_folds = out.folds.size();
  std::vector<std::vector<double>> fold_values(k_folds);
  std::vector<char> used_flags(k_folds, 0);
  out.fold_projections.resize(k_folds);
  std::vector<std::string> fold_warnings(k_folds);

  SparConfig fold_cfg = cfg;
  fold_cfg.threads = 1;
  parallel_for(k_folds, cfg.threads, [&](std::size_t f) {
    const auto& held = out.folds[f];
    const auto train = complement(n, held);
    const VectorXd y_train = take_rows(y, train);
    if (cfg.family.family == FamilyId::binomial && (y_train.array() == y_train(0)).all()) {
      fold_warnings[f] = "fold " + std::to_string(f) + " skipped: training response is constant";
      return;
    }
    try {
      const Standardized part = standardize(take_rows(x, train), y_train, cfg.family);
      EnsembleFit fold_fit = fit_ensemble(part.x, part.y, fold_cfg, count, cfg.seed, &frozen, part.stats.constant_cols);
      const MatrixXd x_held = take_rows(x, held);
      const VectorXd y_held = take_rows(y, held);
      const SelectionGrid g = evaluate_grid(fold_fit.models, part.stats, cfg.family, x_held, y_held, cfg.measure,
                                            ens.nus, ens.nummods, 1);
      fold_values[f].reserve(n_cells);
      for (const auto& cell : g.cells) fold_values[f].push_back(cell.measure);
      for (auto& m : fold_fit.models) out.fold_projections[f].push_back(std::move(m.projection));
      used_flags[f] = 1;
    } catch (const NumericalError& e) {
      fold_warnings[f] = "fold " + std::to_string(f) + " skipped: " + e.what();
    }
  });
  for (auto& w : fold_warnings) {
    if (!w.empty()) ens.warnings.push_back(std::move(w));
  }
  out.fold_used.assign(used_flags.begin(), used_flags.end());
  const auto used = std::count(out.fold_used.begin(), out.fold_used.end(), true);
  if (used < 2) throw CvError("fewer than 2 usable cross-validation folds");

  // Active counts come from the full-data ensemble.
  SelectionGrid grid = evaluate_grid(ens.models, ens.stats, ens.family, x, y, cfg.measure, ens.nus, ens.nummods,
                                     cfg.threads);
  grid.cross_validated = true;
  grid.nfolds = static_cast<Index>(used);
  for (std::size_t c = 0; c < n_cells; ++c) {
    GridCell& cell = grid.cells[c];
    cell.fold_values.clear();
    std::vector<double> finite;
    for (std::size_t f = 0; f < k_folds; ++f) {
      if (!out.fold_used[f]) continue;
      cell.fold_values.push_back(fold_values[f][c]);
      if (!std::isnan(fold_values[f][c])) finite.push_back(fold_values[f][c]);
    }
    if (finite.empty()) {
      cell.measure = std::numeric_limits<double>::quiet_NaN();
      cell.se = 0.0;
      continue;
    }
    const double k = static_cast<double>(finite.size());
    const double mean = std::accumulate(finite.begin(), finite.end(), 0.0) / k;
    double ss = 0.0;
    for (double v : finite) ss += (v - mean) * (v - mean);
    cell.measure = mean;
    cell.se = finite.size() > 1 ? std::sqrt(ss / (k - 1.0)) / std::sqrt(k) : 0.0;
  }
  ens.grid = std::move(grid);
  ens.best = argmin_cell(ens.grid);
  ens.one_se = one_se_rule(ens.grid);
  return out;
}

}  // namespace spar
