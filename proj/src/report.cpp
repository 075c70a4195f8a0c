#include "spar/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>

#include "spar/data.hpp"
#include "spar/errors.hpp"

namespace spar {

std::optional<FiveNumberSummary> summarize_nonzero(const VectorXd& v) {
  std::vector<double> nz;
  for (Index i = 0; i < v.size(); ++i) {
    if (v(i) != 0.0) nz.push_back(v(i));
  }
  if (nz.empty()) return std::nullopt;
  std::sort(nz.begin(), nz.end());
  FiveNumberSummary s;
  s.min = nz.front();
  s.q1 = quantile_sorted(nz, 0.25);
  s.median = quantile_sorted(nz, 0.5);
  s.mean = std::accumulate(nz.begin(), nz.end(), 0.0) / static_cast<double>(nz.size());
  s.q3 = quantile_sorted(nz, 0.75);
  s.max = nz.back();
  return s;
}

namespace {

std::string printf_str(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

std::string summary_table(const VectorXd& beta) {
  const auto s = summarize_nonzero(beta);
  if (!s) return "All coefficients are zero.\n";
  const double vals[] = {s->min, s->q1, s->median, s->mean, s->q3, s->max};
  const char* heads[] = {"Min.", "1st Qu.", "Median", "Mean", "3rd Qu.", "Max."};
  std::string cells[6];
  std::size_t width = 0;
  for (int i = 0; i < 6; ++i) {
    cells[i] = printf_str("%.5f", vals[i]);
    width = std::max({width, cells[i].size(), std::string(heads[i]).size()});
  }
  std::ostringstream out;
  for (int i = 0; i < 6; ++i) out << std::string(width + 1 - std::string(heads[i]).size(), ' ') << heads[i];
  out << '\n';
  for (int i = 0; i < 6; ++i) out << std::string(width + 1 - cells[i].size(), ' ') << cells[i];
  out << '\n';
  return out.str();
}

}  // namespace

std::string format_summary(const SparEnsemble& ens) {
  std::ostringstream out;
  const Index p = ens.num_predictors();
  const bool cv = ens.grid.cross_validated;
  const Coefficients best = coef(ens, ens.best.nu, ens.best.nummod);
  out << (cv ? "spar.cv object:\n" : "spar object:\n");
  if (cv) {
    out << "Smallest CV-Meas " << printf_str("%.1f", ens.best.measure) << " reached for nummod=" << ens.best.nummod
        << ",\n";
  } else {
    out << "Smallest Validation Measure reached for nummod=" << ens.best.nummod << ",\n";
  }
  out << "              nu=" << printf_str("%.2e", ens.best.nu) << " leading to " << best.active << " / " << p
      << " active predictors.\n";
  out << "Summary of those non-zero coefficients:\n" << summary_table(best.beta);
  if (cv && ens.one_se) {
    const Coefficients sparse = coef(ens, ens.one_se->nu, ens.one_se->nummod);
    out << "\nSparsest coefficient within one standard error of best CV-Meas\n"
        << "              reached for nummod=" << ens.one_se->nummod << ", nu=" << printf_str("%.2e", ens.one_se->nu)
        << "\nleading to " << sparse.active << " / " << p << " active\n"
        << "              predictors with CV-Meas " << printf_str("%.1f", ens.one_se->measure) << ".\n"
        << "Summary of those non-zero coefficients:\n"
        << summary_table(sparse.beta);
  }
  for (const auto& w : ens.warnings) out << "Warning: " << w << '\n';
  return out.str();
}

namespace {

template <class T>
std::size_t nearest(const std::vector<T>& grid, T value) {
  if (grid.empty()) throw ConfigError("empty selection grid");
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (std::abs(static_cast<double>(grid[i] - value)) < std::abs(static_cast<double>(grid[best] - value))) best = i;
  }
  return best;
}

}  // namespace

std::vector<CurvePoint> grid_curve(const SparEnsemble& ens, PlotAlong along, std::optional<double> nu,
                                   std::optional<Index> nummod) {
  const SelectionGrid& g = ens.grid;
  std::vector<CurvePoint> out;
  auto push = [&](std::size_t i, std::size_t k) {
    const GridCell& c = g.at(i, k);
    out.push_back({c.nu, c.nummod, c.measure, c.se, c.active});
  };
  if (along == PlotAlong::nu) {
    const std::size_t k = nearest(g.nummods, nummod.value_or(ens.best.nummod));
    for (std::size_t i = 0; i < g.nus.size(); ++i) push(i, k);
  } else {
    const std::size_t i = nearest(g.nus, nu.value_or(ens.best.nu));
    for (std::size_t k = 0; k < g.nummods.size(); ++k) push(i, k);
  }
  return out;
}

std::vector<ResidualPoint> residuals_vs_fitted(const SparEnsemble& ens, const MatrixXd& x, const VectorXd& y,
                                               std::optional<double> nu, std::optional<Index> nummod,
                                               OptPar opt_par) {
  if (x.rows() != y.size()) throw ConfigError("fitting data: response length does not match rows");
  const VectorXd fitted = predict(ens, x, ResponseType::response, AverageType::link, nu, nummod, opt_par);
  std::vector<ResidualPoint> out(static_cast<std::size_t>(y.size()));
  for (Index i = 0; i < y.size(); ++i) out[static_cast<std::size_t>(i)] = {fitted(i), y(i) - fitted(i)};
  return out;
}

CoefMatrix coef_matrix(const SparEnsemble& ens, std::optional<std::pair<Index, Index>> prange,
                       const std::vector<Index>& coef_order) {
  const Index p = ens.num_predictors();
  std::vector<Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Index{0});
  if (!coef_order.empty()) {
    std::vector<Index> check = coef_order;
    std::sort(check.begin(), check.end());
    if (check != order) throw ConfigError("coef_order must be a permutation of the predictors");
    order = coef_order;
  }
  Index lo = 1, hi = p;
  if (prange) {
    std::tie(lo, hi) = *prange;
    if (lo < 1 || hi > p || lo > hi) throw ConfigError("prange must satisfy 1 <= first <= last <= p");
  }
  const auto models = static_cast<Index>(ens.models.size());
  MatrixXd all = MatrixXd::Zero(p, models);
  for (Index k = 0; k < models; ++k) all.col(k) = VectorXd(ens.models[static_cast<std::size_t>(k)].beta);

  CoefMatrix cm;
  cm.values.resize(hi - lo + 1, models);
  for (Index r = lo - 1; r < hi; ++r) {
    const Index j = order[static_cast<std::size_t>(r)];
    cm.predictors.push_back(j);
    std::vector<double> row(static_cast<std::size_t>(models));
    for (Index k = 0; k < models; ++k) row[static_cast<std::size_t>(k)] = all(j, k);
    std::sort(row.begin(), row.end(), std::greater<>());
    for (Index k = 0; k < models; ++k) cm.values(r - lo + 1, k) = row[static_cast<std::size_t>(k)];
  }
  return cm;
}

std::string grid_curve_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream out;
  out << "nu,nummod,measure,se,lower,upper,active\n";
  for (const auto& c : curve) {
    out << format_double(c.nu) << ',' << c.nummod << ',' << format_double(c.measure) << ',' << format_double(c.se)
        << ',' << format_double(c.measure - c.se) << ',' << format_double(c.measure + c.se) << ',' << c.active << '\n';
  }
  return out.str();
}

std::string residuals_csv(const std::vector<ResidualPoint>& points) {
  std::ostringstream out;
  out << "fitted,residual\n";
  for (const auto& pt : points) out << format_double(pt.fitted) << ',' << format_double(pt.residual) << '\n';
  return out.str();
}

std::string coef_matrix_csv(const CoefMatrix& cm) {
  std::ostringstream out;
  out << "predictor";
  for (Index k = 0; k < cm.values.cols(); ++k) out << ",rank" << k + 1;
  out << '\n';
  for (Index r = 0; r < cm.values.rows(); ++r) {
    out << cm.predictors[static_cast<std::size_t>(r)] + 1;
    for (Index k = 0; k < cm.values.cols(); ++k) out << ',' << format_double(cm.values(r, k));
    out << '\n';
  }
  return out.str();
}

std::string selection_csv(const SelectionGrid& grid) {
  std::ostringstream out;
  out << "nu,nummod,mean,se,active\n";
  for (const auto& c : grid.cells) {
    out << format_double(c.nu) << ',' << c.nummod << ',' << format_double(c.measure) << ',' << format_double(c.se)
        << ',' << c.active << '\n';
  }
  return out.str();
}

std::string folds_csv(const SelectionGrid& grid) {
  std::ostringstream out;
  out << "nu,nummod,fold,value\n";
  for (const auto& c : grid.cells) {
    for (std::size_t f = 0; f < c.fold_values.size(); ++f)
      out << format_double(c.nu) << ',' << c.nummod << ',' << f + 1 << ',' << format_double(c.fold_values[f]) << '\n';
  }
  return out.str();
}

}  // namespace spar
