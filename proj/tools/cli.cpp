#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "spar/data.hpp"
#include "spar/errors.hpp"
#include "spar/report.hpp"
#include "spar/selection.hpp"
#include "spar/serialization.hpp"

namespace spar::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  // data
  std::string data;
  std::string val_data;
  std::string response = "y";
  bool no_header = false;
  std::string out = ".";
  std::string config;
  int threads = 1;

  // model configuration; applied only when given
  std::string family;
  std::string screen;
  std::string screen_type;
  Index nscreen = 0;
  double split_prop = 0.0;
  std::string rp;
  double psi = 1.0;
  bool rp_data = true;
  Index mslow = 0;
  Index msup = 0;
  Index nnu = 20;
  std::vector<double> nus;
  std::vector<Index> nummods;
  std::string measure;
  std::uint64_t seed = 0;
  Index nfolds = 10;

  // use of a fitted model
  std::string model;
  std::string type = "response";
  std::string avg_type = "link";
  std::string opt_par = "best";
  double nu = 0.0;
  Index nummod = 0;
  std::string coef_file;

  // report
  std::string plot = "all";
  std::string along = "nu";
  std::string xfit;
  std::string yfit;
  std::vector<Index> prange;
  std::vector<Index> coef_order;

  // simulate
  SyntheticSpec sim;
  std::string active = "first";
  Index n_test = 0;
};

struct ConfigFlags {
  CLI::Option* family = nullptr;
  CLI::Option* screen = nullptr;
  CLI::Option* screen_type = nullptr;
  CLI::Option* nscreen = nullptr;
  CLI::Option* split_prop = nullptr;
  CLI::Option* rp = nullptr;
  CLI::Option* psi = nullptr;
  CLI::Option* rp_data = nullptr;
  CLI::Option* mslow = nullptr;
  CLI::Option* msup = nullptr;
  CLI::Option* nnu = nullptr;
  CLI::Option* nus = nullptr;
  CLI::Option* nummods = nullptr;
  CLI::Option* measure = nullptr;
  CLI::Option* seed = nullptr;
};

void add_data_flags(CLI::App* app, Options& o, bool require_data) {
  auto* d = app->add_option("--data", o.data, "CSV file with predictors and response");
  if (require_data) d->required();
  app->add_option("--response", o.response, "response column: header name, or #K for the K-th column")
      ->capture_default_str();
  app->add_flag("--no-header", o.no_header, "CSV files have no header row");
}

ConfigFlags add_config_flags(CLI::App* app, Options& o) {
  ConfigFlags f;
  f.family = app->add_option("--family", o.family, "gaussian | binomial | poisson")
                 ->check(CLI::IsMember({"gaussian", "binomial", "poisson"}));
  f.screen = app->add_option("--screen", o.screen, "screening coefficient: cor | marglik | ridge")
                 ->check(CLI::IsMember({"cor", "marglik", "ridge"}));
  f.screen_type = app->add_option("--screen-type", o.screen_type, "prob | fixed")->check(CLI::IsMember({"prob", "fixed"}));
  f.nscreen = app->add_option("--nscreen", o.nscreen, "number of screened predictors per model (default 2n)");
  f.split_prop = app->add_option("--split-prop", o.split_prop, "share of rows used for screening only");
  f.rp = app->add_option("--rp", o.rp, "gaussian | sparse | cw | haar | haar-select")
             ->check(CLI::IsMember({"gaussian", "sparse", "cw", "haar", "haar-select"}));
  f.psi = app->add_option("--psi", o.psi, "density of the sparse projection");
  f.rp_data = app->add_option("--rp-data", o.rp_data, "data-driven cw projection (true | false)");
  f.mslow = app->add_option("--mslow", o.mslow, "smallest goal dimension (default ceil(log p))");
  f.msup = app->add_option("--msup", o.msup, "largest goal dimension (default floor(n/2))");
  f.nnu = app->add_option("--nnu", o.nnu, "number of threshold values");
  f.nus = app->add_option("--nus", o.nus, "explicit threshold grid, comma separated")->delimiter(',');
  f.nummods = app->add_option("--nummods", o.nummods, "ensemble sizes, comma separated")->delimiter(',');
  f.measure = app->add_option("--measure", o.measure, "deviance | mse | mae | class | 1-auc")
                  ->check(CLI::IsMember({"deviance", "mse", "mae", "class", "1-auc"}));
  f.seed = app->add_option("--seed", o.seed, "master seed");
  app->add_option("--config", o.config, "JSON config file; command-line flags take precedence");
  app->add_option("--threads", o.threads, "worker threads (0 = all cores); results do not depend on it")
      ->capture_default_str();
  return f;
}

void add_model_use_flags(CLI::App* app, Options& o, CLI::Option*& nu, CLI::Option*& nummod) {
  app->add_option("--model", o.model, "model JSON written by fit or cv")->required();
  nu = app->add_option("--nu", o.nu, "threshold; defaults to the selected value");
  nummod = app->add_option("--nummod", o.nummod, "number of models; defaults to the selected value");
  app->add_option("--opt-par", o.opt_par, "best | 1se (cross-validated models)")
      ->check(CLI::IsMember({"best", "1se"}))
      ->capture_default_str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ParseError("failed writing '" + path.string() + "'");
}

ResponseColumn response_column(const std::string& spec) {
  ResponseColumn rc;
  if (!spec.empty() && spec.front() == '#') {
    Index k = 0;
    try {
      k = std::stoll(spec.substr(1));
    } catch (const std::exception&) {
      throw ConfigError("response column '" + spec + "' is not of the form #K");
    }
    if (k < 1) throw ConfigError("response column number must be at least 1");
    rc.index = k - 1;
  } else {
    rc.name = spec;
  }
  return rc;
}

Dataset load_with_response(const std::string& path, const Options& o) {
  const ResponseColumn rc = response_column(o.response);
  if (o.no_header && rc.name) throw ConfigError("--no-header needs the response given as #K");
  return load_csv(path, !o.no_header, rc);
}

// Predictors only; the response column is dropped if present.
MatrixXd load_predictors(const std::string& path, const Options& o, Index p) {
  Dataset all = load_csv(path, !o.no_header, std::nullopt);
  if (all.x.cols() == p) return all.x;
  if (all.x.cols() == p + 1) {
    const ResponseColumn rc = response_column(o.response);
    return load_csv(path, !o.no_header, rc).x;
  }
  throw ParseError("'" + path + "' has " + std::to_string(all.x.cols()) + " columns, the model expects " +
                   std::to_string(p));
}

SparConfig build_config(const Options& o, const ConfigFlags& f) {
  SparConfig cfg;
  if (!o.config.empty()) cfg = config_from_json(read_file(o.config));
  if (f.family->count()) cfg.family = FamilySpec::from_name(o.family);
  if (f.screen->count()) cfg.screen.method = screen_method_from_name(o.screen);
  if (f.screen_type->count()) cfg.screen.selection_type = o.screen_type == "prob" ? SelectionType::prob : SelectionType::fixed;
  if (f.nscreen->count()) cfg.screen.nscreen = o.nscreen;
  if (f.split_prop->count()) cfg.screen.split_data_prop = o.split_prop;
  if (f.rp->count()) cfg.rp.kind = rp_kind_from_name(o.rp);
  if (f.psi->count()) cfg.rp.psi = o.psi;
  if (f.rp_data->count()) cfg.rp.data_driven = o.rp_data;
  if (f.mslow->count()) cfg.rp.mslow = o.mslow;
  if (f.msup->count()) cfg.rp.msup = o.msup;
  if (f.nnu->count()) cfg.nnu = o.nnu;
  if (f.nus->count()) cfg.nus = o.nus;
  if (f.nummods->count()) cfg.nummods = o.nummods;
  if (f.measure->count()) cfg.measure = measure_from_name(o.measure);
  if (f.seed->count()) cfg.seed = o.seed;
  cfg.threads = o.threads;
  cfg.validate();
  return cfg;
}

fs::path output_dir(const Options& o) {
  fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + o.out + "'");
  return dir;
}

void report_warnings(const SparEnsemble& ens, std::ostream& err) {
  for (const auto& w : ens.warnings) err << "warning: " << w << '\n';
}

void write_fit_outputs(const SparEnsemble& ens, const fs::path& dir, std::ostream& out) {
  save_model((dir / "model.json").string(), ens);
  write_file(dir / "selection.csv", selection_csv(ens.grid));
  const std::string summary = format_summary(ens);
  write_file(dir / "summary.txt", summary);
  out << summary;
}

int cmd_fit(const Options& o, const ConfigFlags& f, std::ostream& out, std::ostream& err) {
  const SparConfig cfg = build_config(o, f);
  const Dataset train = load_with_response(o.data, o);
  std::optional<Dataset> val;
  if (!o.val_data.empty()) val = load_with_response(o.val_data, o);
  const SparEnsemble ens =
      val ? fit_spar(train.x, train.y, cfg, &val->x, &val->y) : fit_spar(train.x, train.y, cfg);
  write_fit_outputs(ens, output_dir(o), out);
  report_warnings(ens, err);
  return kOk;
}

int cmd_cv(const Options& o, const ConfigFlags& f, std::ostream& out, std::ostream& err) {
  const SparConfig cfg = build_config(o, f);
  const Dataset train = load_with_response(o.data, o);
  const CvResult cv = cross_validate(train.x, train.y, cfg, o.nfolds);
  const fs::path dir = output_dir(o);
  write_fit_outputs(cv.ensemble, dir, out);
  write_file(dir / "folds.csv", folds_csv(cv.ensemble.grid));
  report_warnings(cv.ensemble, err);
  return kOk;
}

OptPar opt_par_of(const Options& o) { return o.opt_par == "1se" ? OptPar::one_se : OptPar::best; }

int cmd_predict(const Options& o, CLI::Option* nu, CLI::Option* nummod, std::ostream& out) {
  const SparEnsemble ens = load_model(o.model);
  const MatrixXd x = load_predictors(o.data, o, ens.num_predictors());
  const ResponseType type = o.type == "link" ? ResponseType::link : ResponseType::response;
  VectorXd pred;
  if (!o.coef_file.empty()) {
    const Coefficients c = coefficients_from_json(read_file(o.coef_file));
    pred = predict(c, ens.family, x, type);
  } else {
    const AverageType avg = o.avg_type == "response" ? AverageType::response : AverageType::link;
    pred = predict(ens, x, type, avg, nu->count() ? std::optional<double>(o.nu) : std::nullopt,
                   nummod->count() ? std::optional<Index>(o.nummod) : std::nullopt, opt_par_of(o));
  }
  std::ostringstream csv;
  csv << "prediction\n";
  for (Index i = 0; i < pred.size(); ++i) csv << format_double(pred(i)) << '\n';
  const fs::path dir = output_dir(o);
  write_file(dir / "predictions.csv", csv.str());
  out << "wrote " << pred.size() << " predictions to " << (dir / "predictions.csv").string() << '\n';
  return kOk;
}

int cmd_coef(const Options& o, CLI::Option* nu, CLI::Option* nummod, CLI::Option* out_flag, std::ostream& out) {
  const SparEnsemble ens = load_model(o.model);
  const Coefficients c = coef(ens, nu->count() ? std::optional<double>(o.nu) : std::nullopt,
                              nummod->count() ? std::optional<Index>(o.nummod) : std::nullopt, opt_par_of(o));
  const std::string text = coefficients_to_json(c) + "\n";
  if (out_flag->count()) write_file(output_dir(o) / "coef.json", text);
  out << text;
  return kOk;
}

int cmd_report(const Options& o, CLI::Option* nu, CLI::Option* nummod, std::ostream& out) {
  const SparEnsemble ens = load_model(o.model);
  const fs::path dir = output_dir(o);
  const bool all = o.plot == "all";
  const std::optional<double> nu_opt = nu->count() ? std::optional<double>(o.nu) : std::nullopt;
  const std::optional<Index> nummod_opt = nummod->count() ? std::optional<Index>(o.nummod) : std::nullopt;
  const PlotAlong along = o.along == "nummod" ? PlotAlong::nummod : PlotAlong::nu;

  if (o.plot == "res-vs-fitted" && o.xfit.empty())
    throw ConfigError("res-vs-fitted needs --xfit (and --yfit unless --xfit holds the response column)");
  if (all || o.plot == "Val_Measure" || o.plot == "Val_numAct") {
    const std::string csv = grid_curve_csv(grid_curve(ens, along, nu_opt, nummod_opt));
    const std::string suffix = along == PlotAlong::nu ? "_vs_nu.csv" : "_vs_nummod.csv";
    if (all || o.plot == "Val_Measure") write_file(dir / ("val_measure" + suffix), csv);
    if (all || o.plot == "Val_numAct") write_file(dir / ("val_numact" + suffix), csv);
  }
  if (!o.xfit.empty() && (all || o.plot == "res-vs-fitted")) {
    MatrixXd x;
    VectorXd y;
    if (o.yfit.empty()) {
      const Dataset d = load_with_response(o.xfit, o);
      x = d.x;
      y = d.y;
    } else {
      x = load_predictors(o.xfit, o, ens.num_predictors());
      const Dataset yd = load_csv(o.yfit, !o.no_header, std::nullopt);
      if (yd.x.cols() != 1) throw ParseError("--yfit must hold a single column");
      y = yd.x.col(0);
    }
    write_file(dir / "res_vs_fitted.csv",
               residuals_csv(residuals_vs_fitted(ens, x, y, nu_opt, nummod_opt, opt_par_of(o))));
  }
  if (all || o.plot == "coefs") {
    std::optional<std::pair<Index, Index>> prange;
    if (!o.prange.empty()) {
      if (o.prange.size() != 2) throw ConfigError("--prange takes two values");
      prange = std::make_pair(o.prange[0], o.prange[1]);
    }
    std::vector<Index> order;
    for (Index j : o.coef_order) order.push_back(j - 1);
    write_file(dir / "coefs.csv", coef_matrix_csv(coef_matrix(ens, prange, order)));
  }
  out << format_summary(ens);
  return kOk;
}

int cmd_simulate(const Options& o, CLI::Option* family, std::ostream& out) {
  SyntheticSpec spec = o.sim;
  spec.active_positions = o.active == "random" ? ActivePositions::random : ActivePositions::first;
  if (family->count()) spec.family = FamilySpec::from_name(o.family);
  spec.n_test = o.n_test;
  const SyntheticData sd = generate_synthetic(spec, o.seed);
  const fs::path dir = output_dir(o);
  save_csv((dir / "train.csv").string(), sd.data.x, sd.data.y, sd.data.column_names);
  if (sd.data.x_test)
    save_csv((dir / "test.csv").string(), *sd.data.x_test, *sd.data.y_test, sd.data.column_names);
  save_truth((dir / "truth.json").string(), sd.truth);
  out << "wrote " << spec.n << " x " << spec.p << " training data" << (sd.data.x_test ? " and test data" : "")
      << " to " << dir.string() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse projected averaged regression", "spar"};
  app.require_subcommand(1);
  Options o;

  auto* fit = app.add_subcommand("fit", "fit an ensemble and select (nu, nummod) on validation data");
  add_data_flags(fit, o, true);
  fit->add_option("--val-data", o.val_data, "validation CSV; the training data is used when absent");
  fit->add_option("--out", o.out, "output directory")->capture_default_str();
  const ConfigFlags fit_flags = add_config_flags(fit, o);

  auto* cv = app.add_subcommand("cv", "fit an ensemble and select (nu, nummod) by k-fold cross-validation");
  add_data_flags(cv, o, true);
  cv->add_option("--nfolds", o.nfolds, "number of folds")->capture_default_str();
  cv->add_option("--out", o.out, "output directory")->capture_default_str();
  const ConfigFlags cv_flags = add_config_flags(cv, o);

  CLI::Option *pred_nu = nullptr, *pred_nummod = nullptr;
  auto* pred = app.add_subcommand("predict", "predict from a fitted model");
  add_data_flags(pred, o, true);
  add_model_use_flags(pred, o, pred_nu, pred_nummod);
  pred->add_option("--type", o.type, "response | link")->check(CLI::IsMember({"response", "link"}))->capture_default_str();
  pred->add_option("--avg-type", o.avg_type, "link | response")
      ->check(CLI::IsMember({"link", "response"}))
      ->capture_default_str();
  pred->add_option("--coef", o.coef_file, "coefficient JSON written by the coef command");
  pred->add_option("--out", o.out, "output directory")->capture_default_str();

  CLI::Option *coef_nu = nullptr, *coef_nummod = nullptr;
  auto* coef_cmd = app.add_subcommand("coef", "print averaged coefficients of a fitted model");
  add_model_use_flags(coef_cmd, o, coef_nu, coef_nummod);
  auto* coef_out = coef_cmd->add_option("--out", o.out, "also write coef.json to this directory");

  CLI::Option *rep_nu = nullptr, *rep_nummod = nullptr;
  auto* rep = app.add_subcommand("report", "write plot data and the summary of a fitted model");
  add_model_use_flags(rep, o, rep_nu, rep_nummod);
  rep->add_option("--plot", o.plot, "Val_Measure | Val_numAct | res-vs-fitted | coefs | all")
      ->check(CLI::IsMember({"Val_Measure", "Val_numAct", "res-vs-fitted", "coefs", "all"}))
      ->capture_default_str();
  rep->add_option("--along", o.along, "nu | nummod")->check(CLI::IsMember({"nu", "nummod"}))->capture_default_str();
  rep->add_option("--xfit", o.xfit, "CSV of predictors for res-vs-fitted");
  rep->add_option("--yfit", o.yfit, "single-column CSV of responses for res-vs-fitted");
  rep->add_option("--response", o.response, "response column inside --xfit when --yfit is absent")
      ->capture_default_str();
  rep->add_flag("--no-header", o.no_header, "CSV files have no header row");
  rep->add_option("--prange", o.prange, "first,last predictor rows (1-based) of the coefs table")->delimiter(',');
  rep->add_option("--coef-order", o.coef_order, "predictor order (1-based permutation) for the coefs table")
      ->delimiter(',');
  rep->add_option("--out", o.out, "output directory")->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "write a synthetic data set and its truth sidecar");
  sim->add_option("--n", o.sim.n, "training rows")->capture_default_str();
  sim->add_option("--p", o.sim.p, "predictors")->capture_default_str();
  sim->add_option("--n-active", o.sim.n_active, "nonzero coefficients")->capture_default_str();
  sim->add_option("--mu", o.sim.mu, "intercept")->capture_default_str();
  sim->add_option("--sigma2", o.sim.sigma2, "noise variance (gaussian)")->capture_default_str();
  sim->add_option("--coef-pool", o.sim.coef_pool, "values drawn for active coefficients")->delimiter(',');
  sim->add_option("--active", o.active, "first | random")->check(CLI::IsMember({"first", "random"}))->capture_default_str();
  sim->add_option("--n-test", o.n_test, "test rows")->capture_default_str();
  sim->add_option("--rho", o.sim.rho, "AR(1) correlation of neighbouring predictors")->capture_default_str();
  auto* sim_family = sim->add_option("--family", o.family, "gaussian | binomial | poisson")
                         ->check(CLI::IsMember({"gaussian", "binomial", "poisson"}));
  sim->add_option("--seed", o.seed, "seed")->capture_default_str();
  sim->add_option("--out", o.out, "output directory")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    err << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kConfigError;
  }

  try {
    if (fit->parsed()) return cmd_fit(o, fit_flags, out, err);
    if (cv->parsed()) return cmd_cv(o, cv_flags, out, err);
    if (pred->parsed()) return cmd_predict(o, pred_nu, pred_nummod, out);
    if (coef_cmd->parsed()) return cmd_coef(o, coef_nu, coef_nummod, coef_out, out);
    if (rep->parsed()) return cmd_report(o, rep_nu, rep_nummod, out);
    if (sim->parsed()) return cmd_simulate(o, sim_family, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const SchemaError& e) {
    err << "model file error: " << e.what() << '\n';
    return kDataError;
  } catch (const InsufficientDataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const DomainError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const SparError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  }
  return kConfigError;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace spar::cli
