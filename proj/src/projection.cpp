#include "spar/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spar/errors.hpp"
#include "spar/glm.hpp"

namespace spar {

std::string rp_kind_name(RpKind k) {
  switch (k) {
    case RpKind::gaussian: return "gaussian";
    case RpKind::sparse: return "sparse";
    case RpKind::cw: return "cw";
    case RpKind::haar: return "haar";
    case RpKind::haar_select: return "haar-select";
    case RpKind::plugin: return "plugin";
  }
  return "unknown";
}

RpKind rp_kind_from_name(const std::string& name) {
  if (name == "gaussian") return RpKind::gaussian;
  if (name == "sparse") return RpKind::sparse;
  if (name == "cw") return RpKind::cw;
  if (name == "haar") return RpKind::haar;
  if (name == "haar-select" || name == "haar_select") return RpKind::haar_select;
  if (name == "plugin") return RpKind::plugin;
  throw ConfigError("unknown random projection '" + name + "'");
}

void RpSpec::validate() const {
  if (!(psi > 0.0 && psi <= 1.0)) throw ConfigError("psi must lie in (0, 1]");
  if (mslow && *mslow < 1) throw ConfigError("mslow must be at least 1");
  if (mslow && msup && *mslow > *msup) throw ConfigError("mslow must not exceed msup");
  if (b2 < 1) throw ConfigError("B2 must be at least 1");
  if (!(holdout_frac > 0.0 && holdout_frac < 1.0)) throw ConfigError("holdout fraction must lie in (0, 1)");
  if (kind == RpKind::plugin && !ProjectionRegistry::instance().contains(plugin_name))
    throw ConfigError("no projection plugin registered as '" + plugin_name + "'");
}

ProjectionMatrix::ProjectionMatrix(MatrixXd values, RpKind kind)
    : kind_(kind), sparse_(false), dense_values_(std::move(values)) {
  if (!dense_values_.allFinite()) throw NumericalError("projection matrix has non-finite entries");
}

ProjectionMatrix::ProjectionMatrix(SparseMatrix<double> values, RpKind kind)
    : kind_(kind), sparse_(true), sparse_values_(std::move(values)) {
  sparse_values_.makeCompressed();
  for (Index k = 0; k < sparse_values_.nonZeros(); ++k) {
    if (!std::isfinite(sparse_values_.valuePtr()[k])) throw NumericalError("projection matrix has non-finite entries");
  }
}

ProjectionMatrix ProjectionMatrix::from_triplets(Index m, Index q, const std::vector<Eigen::Triplet<double>>& triplets,
                                                 RpKind kind) {
  for (const auto& t : triplets) {
    if (t.row() < 0 || t.row() >= m || t.col() < 0 || t.col() >= q)
      throw SchemaError("projection triplet outside matrix bounds");
  }
  SparseMatrix<double> s(m, q);
  s.setFromTriplets(triplets.begin(), triplets.end());
  return ProjectionMatrix(std::move(s), kind);
}

MatrixXd ProjectionMatrix::to_dense() const { return sparse_ ? MatrixXd(sparse_values_) : dense_values_; }

VectorXd ProjectionMatrix::transpose_times(const VectorXd& gamma) const {
  if (gamma.size() != rows()) throw ConfigError("projection: coefficient length does not match rows");
  if (sparse_) return sparse_values_.transpose() * gamma;
  return dense_values_.transpose() * gamma;
}

std::vector<Eigen::Triplet<double>> ProjectionMatrix::triplets() const {
  std::vector<Eigen::Triplet<double>> out;
  if (sparse_) {
    out.reserve(static_cast<std::size_t>(sparse_values_.nonZeros()));
    for (Index c = 0; c < sparse_values_.outerSize(); ++c) {
      for (SparseMatrix<double>::InnerIterator it(sparse_values_, c); it; ++it) out.emplace_back(it.row(), it.col(), it.value());
    }
  } else {
    out.reserve(static_cast<std::size_t>(dense_values_.size()));
    for (Index c = 0; c < dense_values_.cols(); ++c) {
      for (Index r = 0; r < dense_values_.rows(); ++r) out.emplace_back(r, c, dense_values_(r, c));
    }
  }
  return out;
}

std::vector<Index> ProjectionMatrix::column_rows() const {
  if (!sparse_) throw ConfigError("column_rows requires sparse storage");
  std::vector<Index> rows(static_cast<std::size_t>(cols()));
  for (Index c = 0; c < sparse_values_.outerSize(); ++c) {
    const auto begin = sparse_values_.outerIndexPtr()[c];
    const auto end = sparse_values_.outerIndexPtr()[c + 1];
    if (end - begin != 1) throw ConfigError("projection is not a one-entry-per-column embedding");
    rows[static_cast<std::size_t>(c)] = sparse_values_.innerIndexPtr()[begin];
  }
  return rows;
}

ProjectionMatrix ProjectionMatrix::with_column_values(const VectorXd& values) const {
  if (values.size() != cols()) throw ConfigError("with_column_values: length does not match columns");
  column_rows();
  ProjectionMatrix out = *this;
  for (Index c = 0; c < values.size(); ++c) {
    out.sparse_values_.valuePtr()[out.sparse_values_.outerIndexPtr()[c]] = values(c);
  }
  return out;
}

std::vector<Index> draw_goal_dims(Index count, Index mslow, Index msup, Rng& rng) {
  if (mslow > msup) throw ConfigError("mslow must not exceed msup");
  if (mslow < 1) throw ConfigError("mslow must be at least 1");
  std::uniform_int_distribution<Index> dist(mslow, msup);
  std::vector<Index> dims(static_cast<std::size_t>(std::max<Index>(count, 0)));
  for (auto& d : dims) d = dist(rng);
  return dims;
}

std::pair<Index, Index> goal_dim_bounds(const RpSpec& spec, Index n, Index p) {
  Index msup = spec.msup ? *spec.msup : std::max<Index>(1, n / 2);
  Index mslow = spec.mslow ? *spec.mslow
                           : std::max<Index>(1, static_cast<Index>(std::ceil(std::log(static_cast<double>(std::max<Index>(p, 1))))));
  // Defaults must stay consistent with each other on tiny problems.
  if (!spec.mslow && mslow > msup) mslow = msup;
  if (!spec.msup && msup < mslow) msup = mslow;
  if (mslow > msup) throw ConfigError("mslow must not exceed msup");
  return {mslow, msup};
}

Index jl_min_dim(double n, double eps, double tau) {
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("JL eps must lie in (0, 1)");
  if (!(tau > 0.0)) throw ConfigError("JL tau must be positive");
  if (!(n >= 1.0)) throw ConfigError("JL bound needs n >= 1");
  const double bound = std::log(n) * (4.0 + 2.0 * tau) / (eps * eps / 2.0 - eps * eps * eps / 3.0);
  // Guard against ceil() pushing an exact integer up by a rounding ulp.
  return static_cast<Index>(std::ceil(bound - 1e-9 * std::max(1.0, bound)));
}

ProjectionMatrix gen_gaussian(Index m, Index q, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd phi(m, q);
  for (Index c = 0; c < q; ++c) {
    for (Index r = 0; r < m; ++r) phi(r, c) = normal(rng);
  }
  return ProjectionMatrix(std::move(phi), RpKind::gaussian);
}

ProjectionMatrix gen_sparse(Index m, Index q, double psi, Rng& rng) {
  if (!(psi > 0.0 && psi <= 1.0)) throw ConfigError("psi must lie in (0, 1]");
  const double scale = 1.0 / std::sqrt(psi);
  std::vector<Eigen::Triplet<double>> entries;
  for (Index c = 0; c < q; ++c) {
    for (Index r = 0; r < m; ++r) {
      const double u = open_unit(rng);
      if (u < psi / 2.0) {
        entries.emplace_back(r, c, scale);
      } else if (u < psi) {
        entries.emplace_back(r, c, -scale);
      }
    }
  }
  return ProjectionMatrix::from_triplets(m, q, entries, RpKind::sparse);
}

ProjectionMatrix gen_cw(Index m, Index q, bool data_driven, const std::optional<VectorXd>& diag_values, Rng& rng) {
  if (data_driven && !diag_values) throw ConfigError("data-driven sparse embedding needs diagonal values");
  if (data_driven && diag_values->size() != q) throw ConfigError("diagonal values must have one entry per column");
  if (m < 1) throw ConfigError("projection dimension must be at least 1");
  std::uniform_int_distribution<Index> row(0, m - 1);
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(q));
  for (Index c = 0; c < q; ++c) {
    const Index h = row(rng);
    const double sign = (rng() >> 63) ? 1.0 : -1.0;
    entries.emplace_back(h, c, data_driven ? (*diag_values)(c) : sign);
  }
  return ProjectionMatrix::from_triplets(m, q, entries, RpKind::cw);
}

ProjectionMatrix gen_haar(Index m, Index q, Rng& rng) {
  if (m > q) throw ConfigError("Haar projection needs m <= q");
  if (m < 1) throw ConfigError("projection dimension must be at least 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd g(q, m);
  for (Index c = 0; c < m; ++c) {
    for (Index r = 0; r < q; ++r) g(r, c) = normal(rng);
  }
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd thin = qr.householderQ() * MatrixXd::Identity(q, m);
  return ProjectionMatrix(MatrixXd(thin.transpose()), RpKind::haar);
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

}  // namespace

HoldoutChoice select_best_projection(const std::vector<ProjectionMatrix>& candidates, const MatrixXd& x_sub,
                                     const VectorXd& y, const FamilySpec& fam, double epsilon,
                                     const std::vector<Index>& holdout_rows) {
  if (candidates.empty()) throw ConfigError("no candidate projections");
  const Index n = x_sub.rows();
  std::vector<char> in_holdout(static_cast<std::size_t>(n), 0);
  for (Index r : holdout_rows) in_holdout[static_cast<std::size_t>(r)] = 1;
  std::vector<Index> train_rows;
  for (Index r = 0; r < n; ++r) {
    if (!in_holdout[static_cast<std::size_t>(r)]) train_rows.push_back(r);
  }
  if (holdout_rows.size() < 2 || train_rows.size() < 2) throw ConfigError("holdout split leaves fewer than 2 rows");
  const MatrixXd x_train = take_rows(x_sub, train_rows);
  const MatrixXd x_test = take_rows(x_sub, holdout_rows);
  const VectorXd y_train = take_rows(y, train_rows);
  const VectorXd y_test = take_rows(y, holdout_rows);

  GlmControl<double> ctl;
  ctl.epsilon = epsilon;
  const double fallback = std::max(epsilon, 1e-4 * static_cast<double>(train_rows.size()));

  HoldoutChoice choice;
  choice.errors.reserve(candidates.size());
  for (const auto& phi : candidates) {
    const auto fit = fit_marginal_glm(project(x_train, phi), y_train, fam, ctl, fallback);
    const VectorXd eta = (project(x_test, phi) * fit.coefficients).array() + fit.intercept;
    const VectorXd mu = linkinv_eval(fam, eta);
    double err = 0.0;
    if (fam.family == FamilyId::binomial) {
      for (Index i = 0; i < mu.size(); ++i) err += ((mu(i) > 0.5 ? 1.0 : 0.0) != y_test(i)) ? 1.0 : 0.0;
    } else {
      err = (mu - y_test).squaredNorm();
    }
    choice.errors.push_back(err / static_cast<double>(mu.size()));
  }
  choice.best = static_cast<std::size_t>(
      std::min_element(choice.errors.begin(), choice.errors.end()) - choice.errors.begin());
  return choice;
}

ProjectionMatrix gen_haar_select(Index m, const MatrixXd& x_sub, const VectorXd& y, const FamilySpec& fam, Index b2,
                                 double holdout_frac, double epsilon, Rng& rng) {
  if (b2 < 1) throw ConfigError("B2 must be at least 1");
  const Index n = x_sub.rows();
  const auto n_hold = static_cast<Index>(std::floor(static_cast<double>(n) * holdout_frac));
  if (n_hold < 2) throw ConfigError("holdout would have fewer than 2 rows");
  // Candidates come first from the stream so that b2 == 1 reproduces gen_haar.
  std::vector<ProjectionMatrix> candidates;
  candidates.reserve(static_cast<std::size_t>(b2));
  for (Index b = 0; b < b2; ++b) candidates.push_back(gen_haar(m, x_sub.cols(), rng));
  if (b2 == 1) return ProjectionMatrix(candidates.front().dense_values(), RpKind::haar_select);

  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  std::shuffle(rows.begin(), rows.end(), rng);
  rows.resize(static_cast<std::size_t>(n_hold));
  std::sort(rows.begin(), rows.end());
  const auto choice = select_best_projection(candidates, x_sub, y, fam, epsilon, rows);
  ProjectionMatrix best = candidates[choice.best];
  return ProjectionMatrix(best.dense_values(), RpKind::haar_select);
}

ProjectionRegistry& ProjectionRegistry::instance() {
  static ProjectionRegistry registry;
  return registry;
}

void ProjectionRegistry::add(const std::string& name, ProjectionPlugin fn) { plugins_[name] = std::move(fn); }

const ProjectionPlugin& ProjectionRegistry::get(const std::string& name) const {
  auto it = plugins_.find(name);
  if (it == plugins_.end()) throw ConfigError("no projection plugin registered as '" + name + "'");
  return it->second;
}

bool ProjectionRegistry::contains(const std::string& name) const { return plugins_.count(name) > 0; }

namespace {

VectorXd restrict_to(const VectorXd& omega, const IndexSet& indices) {
  VectorXd out(static_cast<Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) out(static_cast<Index>(c)) = omega(indices[c]);
  return out;
}

}  // namespace

ProjectionMatrix generate_projection(const RpSpec& spec, Index m, const IndexSet& indices, const ProjectionData& data,
                                     Rng& rng) {
  const auto q = static_cast<Index>(indices.size());
  switch (spec.kind) {
    case RpKind::gaussian:
      return gen_gaussian(m, q, rng);
    case RpKind::sparse:
      return gen_sparse(m, q, spec.psi, rng);
    case RpKind::cw: {
      std::optional<VectorXd> diag;
      if (spec.data_driven) {
        if (!data.omega) throw ConfigError("data-driven sparse embedding needs screening coefficients");
        diag = restrict_to(*data.omega, indices);
      }
      return gen_cw(m, q, spec.data_driven, diag, rng);
    }
    case RpKind::haar:
      return gen_haar(std::min(m, q), q, rng);
    case RpKind::haar_select: {
      if (!data.x || !data.y) throw ConfigError("haar-select needs the training data");
      return gen_haar_select(std::min(m, q), select_columns(*data.x, indices), *data.y, data.family, spec.b2,
                             spec.holdout_frac, data.epsilon, rng);
    }
    case RpKind::plugin: {
      ProjectionMatrix phi = ProjectionRegistry::instance().get(spec.plugin_name)(m, indices, &data, spec.controls);
      if (phi.cols() != q) throw ConfigError("projection plugin returned the wrong number of columns");
      return phi;
    }
  }
  throw ConfigError("unhandled projection kind");
}

ProjectionMatrix refresh_projection(const RpSpec& spec, const ProjectionMatrix& phi, const IndexSet& indices,
                                    const VectorXd& omega) {
  if (spec.kind != RpKind::cw || !spec.data_driven || phi.kind() != RpKind::cw) return phi;
  return phi.with_column_values(restrict_to(omega, indices));
}

MatrixXd project(const MatrixXd& x_sub, const ProjectionMatrix& phi) {
  if (x_sub.cols() != phi.cols()) throw ConfigError("project: column count does not match projection");
  if (phi.is_sparse()) return x_sub * phi.sparse_values().transpose();
  return x_sub * phi.dense_values().transpose();
}

MatrixXd select_columns(const MatrixXd& x, const IndexSet& indices) {
  MatrixXd out(x.rows(), static_cast<Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) out.col(static_cast<Index>(c)) = x.col(indices[c]);
  return out;
}

}  // namespace spar
