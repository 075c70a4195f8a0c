#include "spar/serialization.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "spar/errors.hpp"

namespace spar {

using nlohmann::json;

namespace {

// Non-finite values are stored as strings; plain JSON has no NaN.
json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double get_num(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw SchemaError("expected a number, found '" + s + "'");
  }
  if (!j.is_number()) throw SchemaError("expected a number");
  return j.get<double>();
}

json vec(const VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

VectorXd get_vec(const json& j) {
  if (!j.is_array()) throw SchemaError("expected an array of numbers");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = get_num(j[i]);
  return v;
}

json index_vec(const std::vector<Index>& v) { return json(std::vector<std::int64_t>(v.begin(), v.end())); }

std::vector<Index> get_index_vec(const json& j) {
  if (!j.is_array()) throw SchemaError("expected an array of integers");
  std::vector<Index> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number_integer()) throw SchemaError("expected an integer");
    out.push_back(static_cast<Index>(e.get<std::int64_t>()));
  }
  return out;
}

json controls_json(const Controls& c) {
  json j = json::object();
  for (const auto& [k, v] : c) j[k] = num(v);
  return j;
}

Controls get_controls(const json& j) {
  if (!j.is_object()) throw ConfigError("controls must be an object");
  Controls c;
  for (auto it = j.begin(); it != j.end(); ++it) c[it.key()] = get_num(it.value());
  return c;
}

template <class T>
json opt(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_floating_point_v<T>) {
    return num(*v);
  } else {
    return static_cast<std::int64_t>(*v);
  }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; }))
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

std::optional<double> get_opt_double(const json& j) {
  if (j.is_null()) return std::nullopt;
  return get_num(j);
}

std::optional<Index> get_opt_index(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_number_integer()) throw ConfigError("expected an integer");
  return static_cast<Index>(j.get<std::int64_t>());
}

json config_json(const SparConfig& cfg) {
  json j;
  j["family"] = family_name(cfg.family.family);
  j["link"] = link_name(cfg.family.link);
  j["screen"] = {{"method", screen_method_name(cfg.screen.method)},
                 {"nscreen", opt(cfg.screen.nscreen)},
                 {"type", cfg.screen.selection_type == SelectionType::prob ? "prob" : "fixed"},
                 {"split_data_prop", opt(cfg.screen.split_data_prop)},
                 {"epsilon", opt(cfg.screen.epsilon)},
                 {"plugin", cfg.screen.plugin_name},
                 {"controls", controls_json(cfg.screen.controls)}};
  j["rp"] = {{"kind", rp_kind_name(cfg.rp.kind)},
             {"psi", num(cfg.rp.psi)},
             {"data_driven", cfg.rp.data_driven},
             {"mslow", opt(cfg.rp.mslow)},
             {"msup", opt(cfg.rp.msup)},
             {"b2", static_cast<std::int64_t>(cfg.rp.b2)},
             {"holdout_frac", num(cfg.rp.holdout_frac)},
             {"plugin", cfg.rp.plugin_name},
             {"controls", controls_json(cfg.rp.controls)}};
  j["model"] = {{"epsilon", opt(cfg.model.epsilon)}, {"max_iter", cfg.model.max_iter}, {"tol", num(cfg.model.tol)}};
  j["nnu"] = static_cast<std::int64_t>(cfg.nnu);
  j["nus"] = json::array();
  for (double v : cfg.nus) j["nus"].push_back(num(v));
  j["nummods"] = index_vec(cfg.nummods);
  j["measure"] = measure_name(cfg.measure);
  j["seed"] = cfg.seed;
  return j;
}

// Missing keys keep their defaults, so partial config files are valid.
SparConfig config_from(const json& j) {
  check_keys(j, {"family", "link", "screen", "rp", "model", "nnu", "nus", "nummods", "measure", "seed", "threads"},
             "config");
  SparConfig cfg;
  try {
    if (j.contains("family")) cfg.family = FamilySpec::from_name(j.at("family").get<std::string>());
    if (j.contains("link") && j.at("link").get<std::string>() != link_name(cfg.family.link))
      throw ConfigError("only canonical links are supported");
    if (j.contains("screen")) {
      const json& s = j.at("screen");
      check_keys(s, {"method", "nscreen", "type", "split_data_prop", "epsilon", "plugin", "controls"}, "screen");
      if (s.contains("method")) cfg.screen.method = screen_method_from_name(s.at("method").get<std::string>());
      if (s.contains("nscreen")) cfg.screen.nscreen = get_opt_index(s.at("nscreen"));
      if (s.contains("type")) {
        const auto t = s.at("type").get<std::string>();
        if (t != "prob" && t != "fixed") throw ConfigError("screening type must be 'prob' or 'fixed'");
        cfg.screen.selection_type = t == "prob" ? SelectionType::prob : SelectionType::fixed;
      }
      if (s.contains("split_data_prop")) cfg.screen.split_data_prop = get_opt_double(s.at("split_data_prop"));
      if (s.contains("epsilon")) cfg.screen.epsilon = get_opt_double(s.at("epsilon"));
      if (s.contains("plugin")) cfg.screen.plugin_name = s.at("plugin").get<std::string>();
      if (s.contains("controls")) cfg.screen.controls = get_controls(s.at("controls"));
    }
    if (j.contains("rp")) {
      const json& r = j.at("rp");
      check_keys(r, {"kind", "psi", "data_driven", "mslow", "msup", "b2", "holdout_frac", "plugin", "controls"}, "rp");
      if (r.contains("kind")) cfg.rp.kind = rp_kind_from_name(r.at("kind").get<std::string>());
      if (r.contains("psi")) cfg.rp.psi = get_num(r.at("psi"));
      if (r.contains("data_driven")) cfg.rp.data_driven = r.at("data_driven").get<bool>();
      if (r.contains("mslow")) cfg.rp.mslow = get_opt_index(r.at("mslow"));
      if (r.contains("msup")) cfg.rp.msup = get_opt_index(r.at("msup"));
      if (r.contains("b2")) cfg.rp.b2 = r.at("b2").get<std::int64_t>();
      if (r.contains("holdout_frac")) cfg.rp.holdout_frac = get_num(r.at("holdout_frac"));
      if (r.contains("plugin")) cfg.rp.plugin_name = r.at("plugin").get<std::string>();
      if (r.contains("controls")) cfg.rp.controls = get_controls(r.at("controls"));
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      check_keys(m, {"epsilon", "max_iter", "tol"}, "model");
      if (m.contains("epsilon")) cfg.model.epsilon = get_opt_double(m.at("epsilon"));
      if (m.contains("max_iter")) cfg.model.max_iter = m.at("max_iter").get<int>();
      if (m.contains("tol")) cfg.model.tol = get_num(m.at("tol"));
    }
    if (j.contains("nnu")) cfg.nnu = j.at("nnu").get<std::int64_t>();
    if (j.contains("nus")) {
      cfg.nus.clear();
      for (const auto& v : j.at("nus")) cfg.nus.push_back(get_num(v));
    }
    if (j.contains("nummods")) {
      const json& nm = j.at("nummods");
      cfg.nummods = nm.is_array() ? get_index_vec(nm) : std::vector<Index>{nm.get<std::int64_t>()};
    }
    if (j.contains("measure")) cfg.measure = measure_from_name(j.at("measure").get<std::string>());
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const SchemaError& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

json choice_json(const GridChoice& c) {
  return {{"nu", num(c.nu)},
          {"nummod", static_cast<std::int64_t>(c.nummod)},
          {"measure", num(c.measure)},
          {"se", num(c.se)},
          {"active", static_cast<std::int64_t>(c.active)}};
}

GridChoice get_choice(const json& j) {
  GridChoice c;
  c.nu = get_num(j.at("nu"));
  c.nummod = j.at("nummod").get<std::int64_t>();
  c.measure = get_num(j.at("measure"));
  c.se = get_num(j.at("se"));
  c.active = j.at("active").get<std::int64_t>();
  return c;
}

json projection_json(const ProjectionMatrix& phi) {
  json j;
  j["kind"] = rp_kind_name(phi.kind());
  j["rows"] = static_cast<std::int64_t>(phi.rows());
  j["cols"] = static_cast<std::int64_t>(phi.cols());
  if (phi.is_sparse()) {
    j["storage"] = "triplets";
    json rows = json::array(), cols = json::array(), vals = json::array();
    for (const auto& t : phi.triplets()) {
      rows.push_back(static_cast<std::int64_t>(t.row()));
      cols.push_back(static_cast<std::int64_t>(t.col()));
      vals.push_back(num(t.value()));
    }
    j["i"] = std::move(rows);
    j["j"] = std::move(cols);
    j["x"] = std::move(vals);
  } else {
    j["storage"] = "dense";
    const MatrixXd& d = phi.dense_values();
    json vals = json::array();
    for (Index c = 0; c < d.cols(); ++c) {
      for (Index r = 0; r < d.rows(); ++r) vals.push_back(num(d(r, c)));
    }
    j["x"] = std::move(vals);  // column-major
  }
  return j;
}

ProjectionMatrix get_projection(const json& j) {
  const RpKind kind = rp_kind_from_name(j.at("kind").get<std::string>());
  const Index m = j.at("rows").get<std::int64_t>();
  const Index q = j.at("cols").get<std::int64_t>();
  if (m < 0 || q < 0) throw SchemaError("negative projection dimensions");
  const auto storage = j.at("storage").get<std::string>();
  const VectorXd vals = get_vec(j.at("x"));
  if (storage == "dense") {
    if (vals.size() != m * q) throw SchemaError("dense projection has the wrong number of values");
    return ProjectionMatrix(MatrixXd(Eigen::Map<const MatrixXd>(vals.data(), m, q)), kind);
  }
  if (storage != "triplets") throw SchemaError("unknown projection storage '" + storage + "'");
  const auto rows = get_index_vec(j.at("i"));
  const auto cols = get_index_vec(j.at("j"));
  if (rows.size() != cols.size() || static_cast<Index>(rows.size()) != vals.size())
    throw SchemaError("projection triplet arrays differ in length");
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k > 0 && (cols[k] < cols[k - 1] || (cols[k] == cols[k - 1] && rows[k] <= rows[k - 1])))
      throw SchemaError("projection triplets are not in column-major order");
    t.emplace_back(rows[k], cols[k], vals(static_cast<Index>(k)));
  }
  return ProjectionMatrix::from_triplets(m, q, t, kind);
}

SparEnsemble ensemble_from(const json& j) {
  if (!j.is_object()) throw SchemaError("model document must be a JSON object");
  if (!j.contains("format_version")) throw SchemaError("missing format_version");
  const auto version = j.at("format_version").get<std::string>();
  if (version.rfind("1.", 0) != 0) throw VersionError("unsupported model format version '" + version + "'");

  SparEnsemble ens;
  try {
    ens.config = config_from(j.at("config"));
  } catch (const ConfigError& e) {
    throw SchemaError(std::string("invalid config echo: ") + e.what());
  }
  ens.family = FamilySpec::from_name(j.at("family").get<std::string>());
  if (j.at("link").get<std::string>() != link_name(ens.family.link)) throw SchemaError("family and link disagree");
  ens.seed = j.at("seed").get<std::uint64_t>();

  const json& st = j.at("standardization");
  ens.stats.x_mean = get_vec(st.at("x_mean"));
  ens.stats.x_sd = get_vec(st.at("x_sd"));
  ens.stats.y_mean = get_num(st.at("y_mean"));
  ens.stats.y_sd = get_num(st.at("y_sd"));
  ens.stats.constant_cols = get_index_vec(st.at("constant_cols"));
  const Index p = ens.stats.x_mean.size();
  if (ens.stats.x_sd.size() != p) throw SchemaError("standardization vectors differ in length");
  if (!(ens.stats.x_sd.array() > 0.0).all() || !(ens.stats.y_sd > 0.0))
    throw SchemaError("standard deviations must be positive");

  for (const json& mj : j.at("models")) {
    MarginalModel m;
    m.indices = get_index_vec(mj.at("indices"));
    for (std::size_t k = 0; k < m.indices.size(); ++k) {
      if (m.indices[k] < 0 || m.indices[k] >= p || (k > 0 && m.indices[k] <= m.indices[k - 1]))
        throw SchemaError("model indices must be increasing and within [0, p)");
    }
    m.m = mj.at("m").get<std::int64_t>();
    m.projection = get_projection(mj.at("projection"));
    m.gamma0 = get_num(mj.at("gamma0"));
    m.gamma = get_vec(mj.at("gamma"));
    m.converged = mj.at("converged").get<bool>();
    if (m.projection.rows() != m.m || m.projection.cols() != static_cast<Index>(m.indices.size()) ||
        m.gamma.size() != m.m)
      throw SchemaError("model dimensions are inconsistent");
    m.beta = backproject(m.projection, m.gamma, m.indices, p);
    ens.models.push_back(std::move(m));
  }
  if (ens.models.empty()) throw SchemaError("model has no marginal models");

  for (const auto& v : j.at("nus")) ens.nus.push_back(get_num(v));
  ens.nummods = get_index_vec(j.at("nummods"));
  for (Index nm : ens.nummods) {
    if (nm < 1 || nm > static_cast<Index>(ens.models.size())) throw SchemaError("nummod outside the stored models");
  }

  const json& g = j.at("selection");
  ens.grid.nus = ens.nus;
  ens.grid.nummods = ens.nummods;
  ens.grid.cross_validated = g.at("cross_validated").get<bool>();
  ens.grid.nfolds = g.at("nfolds").get<std::int64_t>();
  for (const json& cj : g.at("cells")) {
    GridCell c;
    c.nu = get_num(cj.at("nu"));
    c.nummod = cj.at("nummod").get<std::int64_t>();
    c.measure = get_num(cj.at("measure"));
    c.se = get_num(cj.at("se"));
    c.active = cj.at("active").get<std::int64_t>();
    for (const auto& v : cj.at("folds")) c.fold_values.push_back(get_num(v));
    ens.grid.cells.push_back(std::move(c));
  }
  if (ens.grid.cells.size() != ens.nus.size() * ens.nummods.size())
    throw SchemaError("selection table does not match the grid");

  ens.best = get_choice(j.at("best"));
  if (!j.at("one_se").is_null()) ens.one_se = get_choice(j.at("one_se"));
  for (const auto& w : j.at("warnings")) ens.warnings.push_back(w.get<std::string>());
  return ens;
}

}  // namespace

std::string model_to_json(const SparEnsemble& ens) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["family"] = family_name(ens.family.family);
  j["link"] = link_name(ens.family.link);
  j["seed"] = ens.seed;
  j["config"] = config_json(ens.config);
  j["standardization"] = {{"x_mean", vec(ens.stats.x_mean)},
                          {"x_sd", vec(ens.stats.x_sd)},
                          {"y_mean", num(ens.stats.y_mean)},
                          {"y_sd", num(ens.stats.y_sd)},
                          {"constant_cols", index_vec(ens.stats.constant_cols)}};
  json models = json::array();
  for (const auto& m : ens.models) {
    models.push_back({{"indices", index_vec(m.indices)},
                      {"m", static_cast<std::int64_t>(m.m)},
                      {"projection", projection_json(m.projection)},
                      {"gamma0", num(m.gamma0)},
                      {"gamma", vec(m.gamma)},
                      {"converged", m.converged}});
  }
  j["models"] = std::move(models);
  j["nus"] = json::array();
  for (double v : ens.nus) j["nus"].push_back(num(v));
  j["nummods"] = index_vec(ens.nummods);

  json cells = json::array();
  for (const auto& c : ens.grid.cells) {
    json folds = json::array();
    for (double v : c.fold_values) folds.push_back(num(v));
    cells.push_back({{"nu", num(c.nu)},
                     {"nummod", static_cast<std::int64_t>(c.nummod)},
                     {"measure", num(c.measure)},
                     {"se", num(c.se)},
                     {"active", static_cast<std::int64_t>(c.active)},
                     {"folds", std::move(folds)}});
  }
  j["selection"] = {{"measure", measure_name(ens.config.measure)},
                    {"cross_validated", ens.grid.cross_validated},
                    {"nfolds", static_cast<std::int64_t>(ens.grid.nfolds)},
                    {"cells", std::move(cells)}};
  j["best"] = choice_json(ens.best);
  j["one_se"] = ens.one_se ? choice_json(*ens.one_se) : json(nullptr);
  j["warnings"] = ens.warnings;
  return j.dump(1);
}

SparEnsemble model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    return ensemble_from(j);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model file does not match the schema: ") + e.what());
  } catch (const SchemaError&) {
    throw;
  } catch (const SparError& e) {
    throw SchemaError(std::string("model file does not match the schema: ") + e.what());
  }
}

void save_model(const std::string& path, const SparEnsemble& ens) {
  const std::string text = model_to_json(ens);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  out << text << '\n';
  if (!out) throw SchemaError("failed writing '" + path + "'");
}

SparEnsemble load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

std::string config_to_json(const SparConfig& cfg) { return config_json(cfg).dump(1); }

SparConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from(j);
}

std::string coefficients_to_json(const Coefficients& c) {
  json j;
  j["intercept"] = num(c.intercept);
  j["beta"] = vec(c.beta);
  j["nu"] = num(c.nu);
  j["nummod"] = static_cast<std::int64_t>(c.nummod);
  j["active"] = static_cast<std::int64_t>(c.active);
  return j.dump(1);
}

Coefficients coefficients_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    Coefficients c;
    c.intercept = get_num(j.at("intercept"));
    c.beta = get_vec(j.at("beta"));
    c.nu = get_num(j.at("nu"));
    c.nummod = j.at("nummod").get<std::int64_t>();
    c.active = j.at("active").get<std::int64_t>();
    return c;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed coefficients: ") + e.what());
  }
}

}  // namespace spar
