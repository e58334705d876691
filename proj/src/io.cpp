#include "rjm/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace rjm::io {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

double parse_real(const std::string& cell, const std::filesystem::path& path, std::size_t line) {
  if (cell.empty()) throw DataError(where(path, line) + "empty field");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || errno == ERANGE || !std::isfinite(v))
    throw DataError(where(path, line) + "not a finite number: '" + cell + "'");
  return v;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read_table(const std::filesystem::path& path, bool has_header) {
  std::istringstream in(read_file(path));
  Table t;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (has_header && t.header.empty()) {
      t.header = std::move(cells);
      width = t.header.size();
      continue;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      std::ostringstream os;
      os << where(path, line_no) << "expected " << width << " fields, found " << cells.size();
      throw DataError(os.str());
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_real(c, path, line_no));
    t.rows.push_back(std::move(row));
  }
  if (has_header && t.header.empty()) throw DataError(path.string() + ": missing header");
  if (t.rows.empty()) throw DataError(path.string() + ": no data rows");
  return t;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows, std::size_t first_col) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(rows.front().size() - first_col);
  Matrix m(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][first_col + static_cast<std::size_t>(j)];
  return m;
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector json_vector(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  return v;
}

Matrix json_matrix(const Json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto p = n > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Matrix m(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != p) throw DataError("model: ragged matrix");
    for (Eigen::Index c = 0; c < p; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

void dump_into(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        dump_into(it.value(), out, indent + 2);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_structured();
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += flat ? "[" : "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",\n";
        first = false;
        if (!flat) out += pad;
        dump_into(e, out, indent + 2);
      }
      out += flat ? "]" : "\n" + close + "]";
      return;
    }
    case Json::value_t::number_float: out += format_real(j.get<double>()); return;
    default: out += j.dump(); return;
  }
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  const auto t = read_table(path, true);
  if (t.header.size() < 2 || t.header.front() != "y")
    throw DataError(where(path, 1) + "header must be y,x1,...,xp");
  Dataset d;
  d.x = to_matrix(t.rows, 1);
  d.y.resize(static_cast<Eigen::Index>(t.rows.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) d.y(static_cast<Eigen::Index>(i)) = t.rows[i][0];
  d.feature_names.assign(t.header.begin() + 1, t.header.end());
  d.validate();
  return d;
}

Matrix read_features_csv(const std::filesystem::path& path) {
  const auto t = read_table(path, true);
  const std::size_t first = !t.header.empty() && t.header.front() == "y" ? 1 : 0;
  if (t.header.size() <= first) throw DataError(where(path, 1) + "no feature columns");
  return to_matrix(t.rows, first);
}

Matrix read_matrix_csv(const std::filesystem::path& path) { return to_matrix(read_table(path, false).rows, 0); }

std::string format_real(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // Keep integral values recognisable as reals.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string dump(const Json& j) {
  std::string out;
  dump_into(j, out, 0);
  out += "\n";
  return out;
}

std::string dataset_to_csv(const Dataset& data) {
  std::string out = "y";
  for (Eigen::Index j = 0; j < data.p(); ++j) out += ",x" + std::to_string(j + 1);
  out += "\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out += format_real(data.y(i));
    for (Eigen::Index j = 0; j < data.p(); ++j) out += "," + format_real(data.x(i, j));
    out += "\n";
  }
  return out;
}

Json params_to_json(const std::vector<ClusterParams>& params) {
  Json arr = Json::array();
  for (const auto& c : params) {
    Json j;
    j["tau"] = c.tau;
    j["mu"] = vector_json(c.mu);
    j["omega"] = matrix_json(c.omega);
    j["alpha"] = c.alpha;
    j["beta"] = vector_json(c.beta);
    j["sigma2"] = c.sigma2;
    j["lambda"] = c.lambda ? Json(*c.lambda) : Json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<ClusterParams> params_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw DataError("model: clusters must be a non-empty array");
  std::vector<ClusterParams> out;
  try {
    for (const auto& e : j) {
      ClusterParams c;
      c.tau = e.at("tau").get<double>();
      c.mu = json_vector(e.at("mu"));
      c.alpha = e.at("alpha").get<double>();
      c.beta = json_vector(e.at("beta"));
      c.sigma2 = e.at("sigma2").get<double>();
      if (e.contains("lambda") && !e.at("lambda").is_null()) c.lambda = e.at("lambda").get<double>();
      const Matrix omega = json_matrix(e.at("omega"));
      if (omega.rows() != c.mu.size() || omega.cols() != c.mu.size() || c.beta.size() != c.mu.size())
        throw DataError("model: inconsistent cluster dimensions");
      c.set_omega(omega);
      out.push_back(std::move(c));
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  } catch (const DomainError& e) {
    throw DataError(std::string("model: ") + e.what());
  }
  return out;
}

Json config_to_json(const FitConfig& config) {
  Json j;
  j["k"] = config.k;
  j["scheme"] = to_string(config.scheme);
  j["c"] = config.c;
  j["psi"] = config.psi ? Json(*config.psi) : Json("universal");
  j["n_starts"] = config.n_starts;
  j["max_iter"] = config.max_iter;
  j["tol"] = config.tol;
  j["min_group_frac_divisor"] = config.min_group_frac_divisor;
  j["seed"] = config.seed;
  j["cv_folds"] = config.cv_folds;
  j["cv_grid_size"] = config.cv_grid_size;
  return j;
}

Json fit_to_json(const FitResult& fit, const FitConfig& config) {
  Json j;
  j["scheme"] = to_string(fit.scheme);
  j["k"] = fit.k();
  j["config"] = config_to_json(config);
  j["clusters"] = params_to_json(fit.params);
  j["labels"] = fit.labels;
  Json trace = Json::array();
  for (double v : fit.objective_trace) trace.push_back(v);
  j["objective_trace"] = std::move(trace);
  j["converged"] = fit.converged;
  j["discarded"] = fit.discarded;
  j["start_index"] = fit.start_index;
  j["iterations"] = fit.iterations;
  j["refit_index"] = fit.refit_index ? Json(*fit.refit_index) : Json(nullptr);
  return j;
}

std::vector<ClusterParams> model_params(const Json& model) {
  if (!model.is_object() || !model.contains("clusters")) throw DataError("model: missing clusters");
  return params_from_json(model.at("clusters"));
}

Json truth_to_json(const sim::SimData& sim, const sim::SimSpec& spec) {
  Json j;
  j["scenario"] = sim::to_string(spec.scenario);
  j["case"] = sim::to_string(spec.regression_case);
  j["correlated"] = spec.correlated;
  j["d"] = spec.d;
  j["p"] = sim.data.p();
  j["n_per_group"] = spec.n_per_group;
  j["seed"] = spec.seed;
  j["shift_sign"] = sim.truth.shift_sign;
  j["synthetic_covariances"] = sim.truth.synthetic_covariances;
  j["groups_identical"] = sim.truth.groups_identical();
  if (spec.scenario == sim::Scenario::SemiSynth) j["snr"] = sim.truth.snr;
  Json groups = Json::array();
  for (const auto& g : sim.truth.groups) {
    Json e;
    e["mu"] = vector_json(g.mu);
    e["sigma_x"] = matrix_json(g.sigma_x);
    e["alpha"] = g.alpha;
    e["beta"] = vector_json(g.beta);
    e["sigma2"] = g.sigma2;
    groups.push_back(std::move(e));
  }
  j["groups"] = std::move(groups);
  return j;
}

std::string labels_csv(const std::vector<int>& labels) {
  std::string out = "row,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out += std::to_string(i + 1) + "," + std::to_string(labels[i]) + "\n";
  return out;
}

std::string trace_csv(const std::vector<double>& trace) {
  std::string out = "iteration,objective\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out += std::to_string(i) + "," + format_real(trace[i]) + "\n";
  return out;
}

}  // namespace rjm::io
