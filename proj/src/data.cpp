#include "spar/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "spar/errors.hpp"
#include "spar/rng.hpp"

namespace spar {

void SyntheticSpec::validate() const {
  if (n < 1 || p < 0) throw ConfigError("synthetic data needs n >= 1 and p >= 0");
  if (n_active < 0 || n_active > p) throw ConfigError("n_active must lie in [0, p]");
  if (n_active > 0 && coef_pool.empty()) throw ConfigError("coefficient pool must not be empty");
  for (double c : coef_pool) {
    if (c == 0.0 || !std::isfinite(c)) throw ConfigError("coefficient pool must hold finite nonzero values");
  }
  if (!(sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
  if (!(rho > -1.0 && rho < 1.0)) throw ConfigError("rho must lie in (-1, 1)");
  if (n_test < 0) throw ConfigError("n_test must be non-negative");
  family.validate();
}

namespace {

MatrixXd draw_predictors(Index n, Index p, double rho, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd x(n, p);
  const double innovation = std::sqrt(1.0 - rho * rho);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) {
      const double z = normal(rng);
      x(i, j) = (j == 0 || rho == 0.0) ? z : rho * x(i, j - 1) + innovation * z;
    }
  }
  return x;
}

VectorXd draw_response(const SyntheticSpec& spec, const MatrixXd& x, const VectorXd& beta, Rng& rng) {
  const VectorXd eta = (x * beta).array() + spec.mu;
  VectorXd y(eta.size());
  switch (spec.family.family) {
    case FamilyId::gaussian: {
      std::normal_distribution<double> noise(0.0, std::sqrt(spec.sigma2));
      for (Index i = 0; i < y.size(); ++i) y(i) = eta(i) + noise(rng);
      break;
    }
    case FamilyId::binomial:
      for (Index i = 0; i < y.size(); ++i) {
        const double prob = 1.0 / (1.0 + std::exp(-eta(i)));
        y(i) = open_unit(rng) < prob ? 1.0 : 0.0;
      }
      break;
    case FamilyId::poisson:
      for (Index i = 0; i < y.size(); ++i) {
        std::poisson_distribution<long long> pois(std::exp(std::min(eta(i), 30.0)));
        y(i) = static_cast<double>(pois(rng));
      }
      break;
  }
  return y;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = make_stream(seed, Stream::synthetic);
  SyntheticData out;
  out.truth.mu = spec.mu;
  out.truth.sigma2 = spec.sigma2;
  out.truth.beta = VectorXd::Zero(spec.p);

  std::vector<Index> positions(static_cast<std::size_t>(spec.p));
  std::iota(positions.begin(), positions.end(), Index{0});
  if (spec.active_positions == ActivePositions::random) std::shuffle(positions.begin(), positions.end(), rng);
  positions.resize(static_cast<std::size_t>(spec.n_active));
  std::sort(positions.begin(), positions.end());
  std::uniform_int_distribution<std::size_t> pick(0, spec.coef_pool.empty() ? 0 : spec.coef_pool.size() - 1);
  for (Index j : positions) out.truth.beta(j) = spec.coef_pool[pick(rng)];
  out.truth.active = positions;

  out.data.x = draw_predictors(spec.n, spec.p, spec.rho, rng);
  out.data.y = draw_response(spec, out.data.x, out.truth.beta, rng);
  if (spec.n_test > 0) {
    out.data.x_test = draw_predictors(spec.n_test, spec.p, spec.rho, rng);
    out.data.y_test = draw_response(spec, *out.data.x_test, out.truth.beta, rng);
  }
  out.data.column_names.reserve(static_cast<std::size_t>(spec.p));
  for (Index j = 0; j < spec.p; ++j) out.data.column_names.push_back("x" + std::to_string(j + 1));
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_cell(std::string_view cell, long row, long col) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (cell.empty() || ec != std::errc() || ptr != end) throw ParseError("non-numeric cell '" + std::string(cell) + "'", row, col);
  if (!std::isfinite(v)) throw ParseError("non-finite cell '" + std::string(cell) + "'", row, col);
  return v;
}

}  // namespace

Dataset parse_csv(const std::string& text, bool has_header, const std::optional<ResponseColumn>& response) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  long line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      throw ParseError("ragged row: expected " + std::to_string(width) + " cells, found " + std::to_string(cells.size()),
                       line_no, static_cast<long>(std::min(cells.size(), width)) + 1);
    if (has_header && header.empty()) {
      for (auto c : cells) header.emplace_back(c);
      continue;
    }
    std::vector<double> values;
    values.reserve(width);
    for (std::size_t c = 0; c < cells.size(); ++c) values.push_back(parse_cell(cells[c], line_no, static_cast<long>(c) + 1));
    rows.push_back(std::move(values));
  }
  if (width == 0) throw ParseError("empty CSV input");

  std::optional<std::size_t> ycol;
  if (response) {
    if (response->name) {
      auto it = std::find(header.begin(), header.end(), *response->name);
      if (it == header.end()) throw ParseError("response column '" + *response->name + "' not found");
      ycol = static_cast<std::size_t>(it - header.begin());
    } else if (response->index) {
      if (*response->index < 0 || static_cast<std::size_t>(*response->index) >= width)
        throw ParseError("response column index " + std::to_string(*response->index) + " out of range");
      ycol = static_cast<std::size_t>(*response->index);
    } else {
      throw ParseError("missing response column");
    }
  }

  Dataset ds;
  const auto n = static_cast<Index>(rows.size());
  const auto p = static_cast<Index>(width - (ycol ? 1 : 0));
  ds.x.resize(n, p);
  if (ycol) ds.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    Index j = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (ycol && c == *ycol) {
        ds.y(i) = rows[static_cast<std::size_t>(i)][c];
      } else {
        ds.x(i, j++) = rows[static_cast<std::size_t>(i)][c];
      }
    }
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!ycol || c != *ycol) ds.column_names.push_back(header[c]);
  }
  return ds;
}

Dataset load_csv(const std::string& path, bool has_header, const std::optional<ResponseColumn>& response) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), has_header, response);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericalError("cannot format number");
  return std::string(buf, ptr);
}

void save_csv(const std::string& path, const MatrixXd& x, const VectorXd& y, const std::vector<std::string>& column_names,
              bool header) {
  if (y.size() != 0 && y.size() != x.rows()) throw ConfigError("save_csv: response length does not match rows");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  if (header) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (j > 0) out << ',';
      out << (static_cast<std::size_t>(j) < column_names.size() ? column_names[static_cast<std::size_t>(j)]
                                                                 : "x" + std::to_string(j + 1));
    }
    if (y.size() != 0) out << (x.cols() > 0 ? "," : "") << 'y';
    out << '\n';
  }
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(x(i, j));
    }
    if (y.size() != 0) out << (x.cols() > 0 ? "," : "") << format_double(y(i));
    out << '\n';
  }
  if (!out) throw ParseError("failed writing '" + path + "'");
}

std::string truth_to_json(const SyntheticTruth& truth) {
  nlohmann::json j;
  j["mu"] = truth.mu;
  j["sigma2"] = truth.sigma2;
  j["beta"] = std::vector<double>(truth.beta.data(), truth.beta.data() + truth.beta.size());
  j["active"] = truth.active;  // zero-based column indices
  return j.dump();
}

void save_truth(const std::string& path, const SyntheticTruth& truth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << truth_to_json(truth) << '\n';
}

}  // namespace spar
