// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "spar/data.hpp"
#include "spar/errors.hpp"
#include "spar/glm.hpp"
#include "spar/projection.hpp"
#include "spar/rng.hpp"
#include "spar/screening.hpp"
#include "spar/selection.hpp"
#include "spar/serialization.hpp"

using namespace spar;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

MatrixXd random_matrix(Index n, Index m, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  MatrixXd x(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) x(i, j) = nd(rng);
  return x;
}

std::string fmt(const char* f, double v) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Pair-counting AUC of score for labels (1 = positive); ties count one half.
double pair_count_auc(const std::vector<double>& score, const std::vector<int>& label) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    if (label[i] != 1) continue;
    for (std::size_t j = 0; j < score.size(); ++j) {
      if (label[j] != 0) continue;
      pairs += 1;
      if (score[i] > score[j]) wins += 1;
      else if (score[i] == score[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

Outcome solver_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> mdist(1, 10);
  std::uniform_real_distribution<double> edist(0.1, 20.0);
  double worst_ls = 0, worst_ridge = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const Index n = 40, m = mdist(rng);
    const MatrixXd z = random_matrix(n, m, rng);
    const VectorXd y = random_matrix(n, 1, rng).col(0) * 2.0 + VectorXd::Constant(n, 0.7);

    // Least squares via normal equations of the design with an intercept column.
    MatrixXd a(n, m + 1);
    a << VectorXd::Ones(n), z;
    const VectorXd ls = (a.transpose() * a).inverse() * (a.transpose() * y);
    const auto fit0 = fit_penalized_glm(z, y, FamilySpec::gaussian());
    worst_ls = std::max(worst_ls, std::abs(fit0.intercept - ls(0)));
    worst_ls = std::max(worst_ls, (fit0.coefficients - ls.tail(m)).cwiseAbs().maxCoeff());

    // Penalized normal equations on centered data; intercept recovered from the means.
    const double eps = edist(rng);
    const VectorXd zbar = z.colwise().mean();
    const MatrixXd zc = z.rowwise() - zbar.transpose();
    const VectorXd b = (zc.transpose() * zc + eps * MatrixXd::Identity(m, m)).inverse() * (zc.transpose() * y);
    const double b0 = y.mean() - zbar.dot(b);
    GlmControl<double> ctl;
    ctl.epsilon = eps;
    const auto fit1 = fit_penalized_glm(z, y, FamilySpec::gaussian(), ctl);
    worst_ridge = std::max(worst_ridge, std::abs(fit1.intercept - b0));
    worst_ridge = std::max(worst_ridge, (fit1.coefficients - b).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  return {worst_ls < 1e-8 && worst_ridge < 1e-8 && secs < 5.0,
          "max err eps=0 " + fmt("%.2e", worst_ls) + ", eps>0 " + fmt("%.2e", worst_ridge) + ", " +
              fmt("%.2f s", secs)};
}

Outcome jl_property() {
  const auto t0 = std::chrono::steady_clock::now();
  const Index m = jl_min_dim(50, 0.5, 1);
  Rng rng = make_stream(7, Stream::projection);
  std::mt19937_64 data_rng(8);
  const MatrixXd pts = random_matrix(500, 50, data_rng);  // one point per column
  const MatrixXd phi = gen_gaussian(m, 500, rng).to_dense() / std::sqrt(static_cast<double>(m));
  const MatrixXd proj = phi * pts;
  int pairs = 0, bad = 0;
  double lo = 1e300, hi = 0;
  for (Index i = 0; i < 50; ++i) {
    for (Index j = i + 1; j < 50; ++j) {
      const double ratio = (proj.col(i) - proj.col(j)).squaredNorm() / (pts.col(i) - pts.col(j)).squaredNorm();
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      ++pairs;
      if (ratio < 0.5 || ratio > 1.5) ++bad;
    }
  }
  const double secs = seconds_since(t0);
  return {pairs == 1225 && bad == 0 && secs < 5.0,
          "m=" + std::to_string(m) + ", ratios in [" + fmt("%.3f", lo) + ", " + fmt("%.3f", hi) + "], " +
              std::to_string(bad) + "/" + std::to_string(pairs) + " outside, " + fmt("%.2f s", secs)};
}

Outcome sampling_law() {
  ScreeningResult sr;
  sr.omega = VectorXd(3);
  sr.omega << 2, 1, 1;
  Rng rng = make_stream(11, Stream::screening);
  const int draws = 100000;
  int hits = 0;
  for (int d = 0; d < draws; ++d) {
    const IndexSet s = select_screened(sr, 1, SelectionType::prob, rng);
    if (s.size() == 1 && s[0] == 0) ++hits;
  }
  const double freq = static_cast<double>(hits) / draws;
  const double se = std::sqrt(0.25 / draws);
  return {std::abs(freq - 0.5) < 3 * se, "frequency " + fmt("%.4f", freq) + " (3 SE = " + fmt("%.4f", 3 * se) + ")"};
}

Outcome signal_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  int mse_wins = 0, auc_wins = 0;
  std::string aucs;
  for (int run = 0; run < 10; ++run) {
    SyntheticSpec spec;  // n=200, p=2000, 100 active, mu=1, sigma2=83
    spec.n_test = 400;
    const auto d = generate_synthetic(spec, 1000 + static_cast<std::uint64_t>(run));
    const MatrixXd xv = d.data.x_test->topRows(200);
    const VectorXd yv = d.data.y_test->head(200);
    const MatrixXd xt = d.data.x_test->bottomRows(200);
    const VectorXd yt = d.data.y_test->tail(200);

    SparConfig cfg;
    cfg.screen.method = ScreenMethod::ridge;
    cfg.rp.kind = RpKind::cw;
    cfg.rp.data_driven = true;
    cfg.measure = Measure::mse;
    cfg.nummods = {5, 10, 15, 20, 25, 30};
    cfg.seed = static_cast<std::uint64_t>(run);
    const SparEnsemble ens = fit_spar(d.data.x, d.data.y, cfg, &xv, &yv);

    const double mse = (yt - predict(ens, xt)).squaredNorm() / 200.0;
    const double null_mse = (yt.array() - d.data.y.mean()).square().sum() / 200.0;
    if (mse < null_mse) ++mse_wins;

    const VectorXd beta = coef(ens).beta;
    std::vector<double> score(static_cast<std::size_t>(spec.p));
    std::vector<int> label(static_cast<std::size_t>(spec.p));
    for (Index j = 0; j < spec.p; ++j) {
      score[static_cast<std::size_t>(j)] = std::abs(beta(j));
      label[static_cast<std::size_t>(j)] = d.truth.beta(j) != 0.0;
    }
    const double auc = pair_count_auc(score, label);
    if (auc > 0.70) ++auc_wins;
    aucs += (run ? "," : "") + fmt("%.3f", auc);
  }
  const double secs = seconds_since(t0);
  return {mse_wins >= 9 && auc_wins >= 9 && secs < 120.0,
          "held-out MSE below null in " + std::to_string(mse_wins) + "/10, support AUC > 0.70 in " +
              std::to_string(auc_wins) + "/10 (" + aucs + "), " + fmt("%.1f s", secs)};
}

Outcome grid_consistency() {
  std::mt19937_64 rng(21);
  const MatrixXd x = random_matrix(80, 150, rng);
  const VectorXd y = x.leftCols(5).rowwise().sum() + random_matrix(80, 1, rng).col(0);
  const MatrixXd xv = random_matrix(40, 150, rng);
  const VectorXd yv = xv.leftCols(5).rowwise().sum();
  double worst = 0;
  bool monotone = true, one_se_ok = true;
  for (Measure measure : {Measure::mse, Measure::mae}) {
    SparConfig cfg;
    cfg.measure = measure;
    cfg.nummods = {3, 7, 12};
    cfg.seed = 4;
    const SparEnsemble ens = fit_spar(x, y, cfg, &xv, &yv);
    const auto& g = ens.grid;
    for (std::size_t a = 0; a < g.nus.size(); ++a) {
      for (std::size_t b = 0; b < g.nummods.size(); ++b) {
        const auto c = average_coefficients(ens.models, ens.stats, ens.family, g.nus[a], g.nummods[b]);
        const VectorXd pred = (xv * c.beta).array() + c.intercept;
        const VectorXd r = yv - pred;
        const double value = measure == Measure::mse ? r.squaredNorm() / 40.0 : r.cwiseAbs().sum() / 40.0;
        worst = std::max(worst, std::abs(value - g.at(a, b).measure));
        if (a > 0 && g.at(a, b).active > g.at(a - 1, b).active) monotone = false;
      }
    }
    const CvResult cv = cross_validate(x, y, cfg, 5);
    if (!cv.ensemble.one_se || cv.ensemble.one_se->active > cv.ensemble.best.active) one_se_ok = false;
    for (std::size_t a = 1; a < cv.ensemble.grid.nus.size(); ++a)
      for (std::size_t b = 0; b < cv.ensemble.grid.nummods.size(); ++b)
        if (cv.ensemble.grid.at(a, b).active > cv.ensemble.grid.at(a - 1, b).active) monotone = false;
  }
  return {worst <= 1e-12 && monotone && one_se_ok,
          "max cell error " + fmt("%.2e", worst) + ", active non-increasing in nu: " + (monotone ? "yes" : "no") +
              ", one-SE sparser: " + (one_se_ok ? "yes" : "no")};
}

Outcome cv_oracle() {
  std::mt19937_64 rng(31);
  const Index n = 12;
  const MatrixXd x = random_matrix(n, 30, rng);
  const VectorXd y = x.col(0) - x.col(3) + 0.5 * random_matrix(n, 1, rng).col(0);
  SparConfig cfg;
  cfg.rp.kind = RpKind::cw;
  cfg.rp.data_driven = true;
  cfg.nummods = {2, 4};
  cfg.nnu = 4;
  cfg.measure = Measure::mse;
  cfg.seed = 3;
  const CvResult cv = cross_validate(x, y, cfg, n);
  const auto& ens = cv.ensemble;

  FrozenProjections frozen;
  for (const auto& m : ens.models) {
    frozen.indices.push_back(m.indices);
    frozen.projections.push_back(m.projection);
  }
  double worst = 0;
  for (std::size_t f = 0; f < cv.folds.size(); ++f) {
    const Index held = cv.folds[f].at(0);
    MatrixXd xt(n - 1, x.cols());
    VectorXd yt(n - 1);
    for (Index r = 0, k = 0; r < n; ++r) {
      if (r == held) continue;
      xt.row(k) = x.row(r);
      yt(k++) = y(r);
    }
    const Standardized st = standardize(xt, yt, cfg.family);
    const EnsembleFit fit =
        fit_ensemble(st.x, st.y, cfg, cfg.max_nummod(), cfg.seed, &frozen, st.stats.constant_cols);
    for (std::size_t a = 0; a < ens.grid.nus.size(); ++a) {
      for (std::size_t b = 0; b < ens.grid.nummods.size(); ++b) {
        const auto c = average_coefficients(fit.models, st.stats, cfg.family, ens.grid.nus[a], ens.grid.nummods[b]);
        const double r = y(held) - (x.row(held).dot(c.beta) + c.intercept);
        worst = std::max(worst, std::abs(r * r - ens.grid.at(a, b).fold_values[f]));
      }
    }
  }

  bool frozen_ok = true;
  bool diag_differs = false;
  for (const auto& fold : cv.fold_projections) {
    for (std::size_t k = 0; k < fold.size(); ++k) {
      const auto& ref = ens.models[k].projection;
      if (fold[k].column_rows() != ref.column_rows() || fold[k].cols() != ref.cols()) frozen_ok = false;
      if (fold[k].to_dense() != ref.to_dense()) diag_differs = true;
    }
  }
  return {worst < 1e-10 && frozen_ok,
          "max fold error " + fmt("%.2e", worst) + ", cw structure identical across folds: " +
              (frozen_ok ? "yes" : "no") + ", diagonals refreshed: " + (diag_differs ? "yes" : "no")};
}

Outcome auc_oracle() {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> ndist(2, 20);
  std::uniform_int_distribution<int> level(0, 5);
  int mismatches = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const int n = ndist(rng);
    VectorXd y(n), mu(n);
    std::vector<double> score(static_cast<std::size_t>(n));
    std::vector<int> label(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      label[static_cast<std::size_t>(i)] = i == 0 ? 1 : (i == 1 ? 0 : static_cast<int>(rng() % 2));
      y(i) = label[static_cast<std::size_t>(i)];
      mu(i) = score[static_cast<std::size_t>(i)] = (level(rng) + 0.5) / 6.0;  // few levels, many ties
    }
    const double got = eval_measure(Measure::one_minus_auc, FamilySpec::binomial(), y, mu);
    if (got != 1.0 - pair_count_auc(score, label)) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + "/200 instances differ"};
}

Outcome determinism() {
  std::mt19937_64 rng(51);
  const MatrixXd x = random_matrix(60, 300, rng);
  VectorXd y(60);
  const VectorXd lin = x.leftCols(4).rowwise().sum();
  for (Index i = 0; i < 60; ++i) y(i) = lin(i) > 0;
  SparConfig cfg;
  cfg.family = FamilySpec::binomial();
  cfg.nummods = {10, 20};
  cfg.measure = Measure::deviance;
  cfg.seed = 99;
  cfg.threads = 1;
  const std::string fit1 = model_to_json(fit_spar(x, y, cfg));
  const std::string cv1 = model_to_json(cross_validate(x, y, cfg, 5).ensemble);
  cfg.threads = 8;
  const SparEnsemble ens8 = fit_spar(x, y, cfg);
  const std::string fit8 = model_to_json(ens8);
  const std::string cv8 = model_to_json(cross_validate(x, y, cfg, 5).ensemble);

  const MatrixXd x_new = random_matrix(50, 300, rng);
  const SparEnsemble back = model_from_json(fit8);
  double worst = 0;
  for (auto type : {ResponseType::response, ResponseType::link})
    for (auto avg : {AverageType::link, AverageType::response})
      worst = std::max(worst, (predict(ens8, x_new, type, avg) - predict(back, x_new, type, avg)).cwiseAbs().maxCoeff());
  const bool same = fit1 == fit8 && cv1 == cv8;
  return {same && worst <= 1e-12, std::string("1 vs 8 workers byte-identical: ") + (same ? "yes" : "no") +
                                      ", round-trip prediction error " + fmt("%.2e", worst)};
}

Outcome degenerate() {
  std::mt19937_64 rng(61);
  std::string why;

  // p below nscreen: every model sees all predictors.
  MatrixXd x = random_matrix(50, 12, rng);
  VectorXd y = x.col(0) + random_matrix(50, 1, rng).col(0);
  SparConfig cfg;
  cfg.nummods = {6};
  cfg.screen.nscreen = 40;
  SparEnsemble ens = fit_spar(x, y, cfg);
  IndexSet full(12);
  std::iota(full.begin(), full.end(), Index{0});
  bool full_ok = true;
  for (const auto& m : ens.models) full_ok = full_ok && m.indices == full;
  if (!full_ok) why += " screening-not-skipped";

  // Constant columns: never screened, zero coefficient.
  x = random_matrix(50, 80, rng);
  x.col(3).setConstant(5.0);
  x.col(40).setZero();
  y = x.col(0) + random_matrix(50, 1, rng).col(0);
  cfg = SparConfig{};
  cfg.nummods = {8};
  ens = fit_spar(x, y, cfg);
  bool const_ok = true;
  for (const auto& m : ens.models)
    for (Index j : m.indices) const_ok = const_ok && j != 3 && j != 40;
  for (const double nu : ens.nus) {
    const auto c = coef(ens, nu, 8);
    const_ok = const_ok && c.beta(3) == 0.0 && c.beta(40) == 0.0;
  }
  if (!const_ok) why += " constant-column-used";

  // Perfectly separated binomial data.
  x = random_matrix(40, 20, rng);
  VectorXd yb(40);
  for (Index i = 0; i < 40; ++i) yb(i) = x(i, 0) > 0 ? 1.0 : 0.0;
  cfg = SparConfig{};
  cfg.family = FamilySpec::binomial();
  cfg.nummods = {5};
  ens = fit_spar(x, yb, cfg);
  bool sep_ok = true;
  for (const auto& m : ens.models) sep_ok = sep_ok && m.converged && m.gamma.allFinite() && std::isfinite(m.gamma0);
  sep_ok = sep_ok && predict(ens, x).allFinite();
  if (!sep_ok) why += " separated-fit-not-finite";

  return {full_ok && const_ok && sep_ok, why.empty() ? "full index sets, constant columns zero, separated fit finite"
                                                     : "failed:" + why};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 solver oracle", solver_oracle},
      {"2 JL distance preservation", jl_property},
      {"3 screening sampling law", sampling_law},
      {"4 end-to-end signal recovery", signal_recovery},
      {"5 grid/selection consistency", grid_consistency},
      {"6 CV oracle", cv_oracle},
      {"7 AUC oracle", auc_oracle},
      {"8 determinism", determinism},
      {"9 degenerate handling", degenerate},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
