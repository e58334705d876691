#include "cli.hpp"

#include "rjm/baselines.hpp"
#include "rjm/em.hpp"
#include "rjm/io.hpp"
#include "rjm/metrics.hpp"
#include "rjm/predict.hpp"
#include "rjm/random.hpp"
#include "rjm/simgen.hpp"
#include "rjm/sparse_regression.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

namespace rjm::cli {
namespace {

namespace fs = std::filesystem;
using io::Json;
using Clock = std::chrono::steady_clock;

int env_threads() {
  const char* v = std::getenv("RJM_THREADS");
  if (!v) return 1;
  const int t = std::atoi(v);
  return t >= 1 ? t : 1;
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
  auto p = out;
  p.replace_extension();
  p += suffix;
  return p;
}

std::string short_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  Json config = nullptr;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  Json extra = Json::object();
  Clock::time_point start = Clock::now();

  void write(const fs::path& path) const {
    Json j;
    j["command"] = command;
    j["argv"] = argv;
    j["config"] = config;
    j["input_paths"] = inputs;
    j["output_paths"] = outputs;
    j["seed"] = seed;
    j["wall_time_s"] = std::chrono::duration<double>(Clock::now() - start).count();
    j["library_version"] = kVersion;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    io::write_atomic(path, io::dump(j));
  }
};

// Options shared by every command that fits models.
struct FitFlags {
  int k = 2;
  std::string scheme = "nj";
  double c = 0.25;
  std::string psi = "universal";
  int starts = 10;
  int max_iter = 20;
  double tol = 1e-6;
  std::uint64_t seed = 1;

  void add_to(CLI::App& app, bool with_k) {
    if (with_k) app.add_option("--k", k, "Number of groups")->check(CLI::PositiveNumber);
    app.add_option("--scheme", scheme, "Regression penalty: nj, flasso or rlasso");
    app.add_option("--c", c, "Random-penalty scale");
    app.add_option("--psi", psi, "Graphical-lasso penalty: universal or a number");
    app.add_option("--starts", starts, "EM starts")->check(CLI::PositiveNumber);
    app.add_option("--max-iter", max_iter, "Iterations per start")->check(CLI::PositiveNumber);
    app.add_option("--tol", tol, "Relative objective change at which a start stops");
    app.add_option("--seed", seed, "Random seed");
  }

  FitConfig config() const {
    FitConfig cfg;
    cfg.k = k;
    cfg.scheme = parse_scheme(scheme);
    cfg.c = c;
    if (psi != "universal") {
      try {
        std::size_t used = 0;
        cfg.psi = std::stod(psi, &used);
        if (used != psi.size()) throw std::invalid_argument(psi);
      } catch (const std::logic_error&) {
        throw DomainError("--psi must be 'universal' or a number, got '" + psi + "'");
      }
    }
    cfg.n_starts = starts;
    cfg.max_iter = max_iter;
    cfg.tol = tol;
    cfg.seed = seed;
    cfg.threads = env_threads();
    cfg.validate();
    return cfg;
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

// ---------------------------------------------------------------- fit

int cmd_fit(const FitFlags& flags, const std::string& data_path, const std::string& out_path, Manifest m,
            std::ostream& out) {
  const auto cfg = flags.config();
  const auto data = io::read_dataset_csv(data_path);
  const auto result = em::fit(data, cfg);

  const fs::path model = out_path;
  const auto labels = sibling(model, ".labels.csv");
  const auto trace = sibling(model, ".trace.csv");
  io::write_atomic(model, io::dump(io::fit_to_json(result, cfg)));
  io::write_atomic(labels, io::labels_csv(result.labels));
  io::write_atomic(trace, io::trace_csv(result.objective_trace));

  m.config = io::config_to_json(cfg);
  m.inputs = {data_path};
  m.outputs = {model.string(), labels.string(), trace.string()};
  m.seed = cfg.seed;
  m.extra["start_index"] = result.start_index;
  m.extra["converged"] = result.converged;
  m.write(sibling(model, ".manifest.json"));
  out << "fitted k=" << cfg.k << " scheme=" << to_string(cfg.scheme) << " start=" << result.start_index
      << " iterations=" << result.iterations << " objective=" << io::format_real(result.objective_trace.back())
      << "\n";
  return kExitOk;
}

// ------------------------------------------------------------ predict

int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& out_path, Manifest m,
                std::ostream& out) {
  const auto params = io::model_params(Json::parse(io::read_file(model_path), nullptr, true));
  const Matrix x = io::read_features_csv(data_path);
  if (x.cols() != params.front().p()) {
    std::ostringstream os;
    os << "data has " << x.cols() << " features but the model expects " << params.front().p();
    throw io::DataError(os.str());
  }
  const auto k = params.size();
  std::string csv = "row,hard_cluster";
  for (std::size_t g = 1; g <= k; ++g) csv += ",prob_" + std::to_string(g);
  csv += ",y_hat\n";
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector xi = x.row(i).transpose();
    const auto a = allocate(xi, params);
    const auto& c = params[static_cast<std::size_t>(a.hard - 1)];
    csv += std::to_string(i + 1) + "," + std::to_string(a.hard);
    for (Eigen::Index g = 0; g < a.probs.size(); ++g) csv += "," + io::format_real(a.probs(g));
    csv += "," + io::format_real(c.alpha + xi.dot(c.beta)) + "\n";
  }
  io::write_atomic(out_path, csv);
  m.inputs = {model_path, data_path};
  m.outputs = {out_path};
  m.write(sibling(out_path, ".manifest.json"));
  out << "predicted " << x.rows() << " rows\n";
  return kExitOk;
}

// ----------------------------------------------------------- simulate

struct SimFlags {
  std::string scenario = "toy51";
  std::string regression_case = "A";
  bool correlated = false;
  std::optional<double> d;
  std::optional<int> p;
  std::optional<int> n_per_group;
  double snr = 3.0;
  double sparsity = 0.04;
  std::string cov_dir;

  void add_to(CLI::App& app) {
    app.add_option("--scenario", scenario, "appendixA, toy51 or semisynth");
    app.add_option("--case", regression_case, "Regression case A, B or C");
    app.add_flag("--correlated", correlated, "Correlated toy51 design");
    app.add_option("--d", d, "Mean shift of group 2");
    app.add_option("--p", p, "Number of features (semisynth)");
    app.add_option("--n", n_per_group, "Samples per group");
    app.add_option("--snr", snr, "Target Var(m) / noise variance (semisynth)");
    app.add_option("--sparsity", sparsity, "Fraction of active coefficients (semisynth)");
    app.add_option("--cov-dir", cov_dir, "Directory holding cov_1.csv and cov_2.csv (semisynth)");
  }

  sim::SimSpec spec(std::uint64_t seed) const {
    sim::SimSpec s;
    s.scenario = sim::parse_scenario(scenario);
    s.regression_case = sim::parse_case(regression_case);
    s.correlated = correlated;
    s.seed = seed;
    s.snr_target = snr;
    s.sparsity = sparsity;
    switch (s.scenario) {
      case sim::Scenario::Toy51:
        s.p = p.value_or(10);
        s.d = d.value_or(1.0);
        s.n_per_group = {n_per_group.value_or(50), n_per_group.value_or(50)};
        break;
      case sim::Scenario::AppendixA:
        if (p && *p != 10) throw DomainError("appendixA has p = 10");
        if (n_per_group && *n_per_group != 100) throw DomainError("appendixA has 100 samples per group");
        s.p = 10;
        s.d = d.value_or(1.0);
        s.n_per_group = {100, 100};
        break;
      case sim::Scenario::SemiSynth:
        s.p = p.value_or(100);
        s.d = d.value_or(0.5);
        s.n_per_group = {n_per_group.value_or(125), n_per_group.value_or(125)};
        break;
    }
    if (!cov_dir.empty()) {
      if (s.scenario != sim::Scenario::SemiSynth) throw DomainError("--cov-dir applies to semisynth only");
      std::vector<Matrix> covs;
      for (int g = 1; g <= 2; ++g) covs.push_back(io::read_matrix_csv(fs::path(cov_dir) / ("cov_" + std::to_string(g) + ".csv")));
      s.base_covariances = std::move(covs);
    }
    s.validate();
    return s;
  }
};

int cmd_simulate(const SimFlags& flags, std::uint64_t seed, const std::string& out_dir, Manifest m,
                 std::ostream& out) {
  const auto spec = flags.spec(seed);
  const auto sim = sim::generate(spec);
  const fs::path dir = out_dir;
  const auto data = dir / "data.csv";
  const auto labels = dir / "labels.csv";
  const auto truth = dir / "truth.json";
  io::write_atomic(data, io::dataset_to_csv(sim.data));
  io::write_atomic(labels, io::labels_csv(sim.labels));
  io::write_atomic(truth, io::dump(io::truth_to_json(sim, spec)));
  if (!flags.cov_dir.empty()) m.inputs = {flags.cov_dir};
  m.outputs = {data.string(), labels.string(), truth.string()};
  m.seed = seed;
  m.extra["synthetic_covariances"] = sim.truth.synthetic_covariances;
  m.write(dir / "manifest.json");
  out << "simulated " << sim.data.n() << " rows, p=" << sim.data.p() << "\n";
  return kExitOk;
}

// --------------------------------------------------------- experiment

struct MetricRow {
  std::string metric;
  std::string method;
  double value = 0.0;
  std::string status = "ok";
};

std::string sanitize(std::string s) {
  for (auto& ch : s)
    if (ch == ',' || ch == '\n') ch = ';';
  return s;
}

Vector column_sd(const Matrix& x) {
  Vector sd(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double s = std::sqrt((x.col(j).array() - x.col(j).mean()).square().sum() / static_cast<double>(x.rows()));
    sd(j) = s > 0.0 ? s : 1.0;
  }
  return sd;
}

// AUC and standardized RMSE of fitted group coefficients against the truth,
// after matching fitted groups to true groups. Averaged over true groups.
void coefficient_metrics(const sim::SimData& sim, const std::vector<int>& labels, const std::vector<Vector>& betas,
                         const std::string& method, std::vector<MetricRow>& rows) {
  const int k = static_cast<int>(betas.size());
  const auto match = metrics::best_label_matching(labels, sim.labels, k);
  const Vector sd = column_sd(sim.data.x);
  double auc = 0.0, rmse = 0.0;
  int n_auc = 0, n_rmse = 0;
  for (int g = 0; g < k; ++g) {
    const int truth_group = match[static_cast<std::size_t>(g)];
    if (truth_group < 1 || truth_group > static_cast<int>(sim.truth.groups.size())) continue;
    const auto& tb = sim.truth.groups[static_cast<std::size_t>(truth_group - 1)].beta;
    std::vector<bool> support(static_cast<std::size_t>(tb.size()));
    for (Eigen::Index j = 0; j < tb.size(); ++j) support[static_cast<std::size_t>(j)] = tb(j) != 0.0;
    const bool mixed = std::find(support.begin(), support.end(), true) != support.end() &&
                       std::find(support.begin(), support.end(), false) != support.end();
    if (mixed) {
      auc += metrics::selection_auc(support, betas[static_cast<std::size_t>(g)]);
      ++n_auc;
    }
    rmse += metrics::coef_rmse_standardized(betas[static_cast<std::size_t>(g)], tb, sd);
    ++n_rmse;
  }
  if (n_auc > 0) rows.push_back({"auc", method, auc / n_auc});
  if (n_rmse > 0) rows.push_back({"rmse", method, rmse / n_rmse});
}

std::vector<MetricRow> run_cell(const sim::SimSpec& spec, const std::string& method, const FitConfig& base,
                                std::uint64_t fit_seed) {
  std::vector<MetricRow> rows;
  try {
    const auto sim = sim::generate(spec);
    std::vector<int> labels;
    std::vector<Vector> betas;
    if (method == "kmeans" || method == "gmm") {
      if (method == "kmeans") {
        Rng rng = make_rng(fit_seed);
        labels = baselines::kmeans(baselines::standardize(sim.data.x), 2, 10, rng).labels;
      } else {
        labels = baselines::gmm(sim.data.x, 2, fit_seed).labels;
      }
      for (auto& l : labels) ++l;
      // Clustering then lasso within each cluster.
      for (int g = 1; g <= 2; ++g) {
        std::vector<Eigen::Index> idx;
        for (std::size_t i = 0; i < labels.size(); ++i)
          if (labels[i] == g) idx.push_back(static_cast<Eigen::Index>(i));
        const auto sub = sim.data.subset(idx);
        if (sub.n() >= 10) {
          betas.push_back(regression::cv_lasso(sub.x, sub.y, 5, 50, derive_seed(fit_seed, {static_cast<std::uint64_t>(g)})).fit.beta);
        } else {
          betas.push_back(Vector::Zero(sim.data.p()));
        }
      }
    } else {
      FitConfig cfg = base;
      cfg.k = 2;
      cfg.scheme = parse_scheme(method);
      cfg.seed = fit_seed;
      cfg.threads = 1;
      const auto fit = em::fit(sim.data, cfg);
      labels = fit.labels;
      for (const auto& c : fit.params) betas.push_back(c.beta);
    }
    rows.push_back({"ari", method, metrics::adjusted_rand(labels, sim.labels)});
    coefficient_metrics(sim, labels, betas, method, rows);
  } catch (const std::exception& e) {
    rows.push_back({"ari", method, std::nan(""), "failed: " + sanitize(e.what())});
  }
  return rows;
}

int cmd_experiment(const SimFlags& sflags, const FitFlags& fflags, const std::string& d_grid, int reps,
                   const std::string& schemes, const std::string& baselines_list, const std::string& out_path,
                   Manifest m, std::ostream& out) {
  if (reps < 1) throw DomainError("--reps must be >= 1");
  const auto grid = parse_grid(d_grid);
  std::vector<std::string> methods;
  for (const auto& s : split_list(schemes)) {
    parse_scheme(s);
    methods.push_back(to_string(parse_scheme(s)));
  }
  for (const auto& b : split_list(baselines_list)) {
    if (b != "kmeans" && b != "gmm") throw DomainError("unknown baseline '" + b + "' (expected kmeans or gmm)");
    methods.push_back(b);
  }
  if (methods.empty()) throw DomainError("no methods selected");
  FitConfig base = fflags.config();

  struct Cell {
    std::size_t d_index;
    int rep;
    std::size_t method;
  };
  std::vector<Cell> cells;
  for (std::size_t di = 0; di < grid.size(); ++di)
    for (int r = 0; r < reps; ++r)
      for (std::size_t mi = 0; mi < methods.size(); ++mi) cells.push_back({di, r, mi});

  // Validate the scenario once before fanning out.
  const auto probe = sflags.spec(fflags.seed);
  std::vector<std::vector<MetricRow>> results(cells.size());
  auto work = [&](std::size_t c) {
    const auto& cell = cells[c];
    auto spec = probe;
    spec.d = grid[cell.d_index];
    spec.seed = derive_seed(fflags.seed, {cell.d_index, static_cast<std::uint64_t>(cell.rep)});
    const auto fit_seed =
        derive_seed(fflags.seed, {cell.d_index, static_cast<std::uint64_t>(cell.rep), 0xf17, cell.method});
    results[c] = run_cell(spec, methods[cell.method], base, fit_seed);
  };
  const int workers = std::min<int>(env_threads(), static_cast<int>(cells.size()));
  if (workers <= 1) {
    for (std::size_t c = 0; c < cells.size(); ++c) work(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < cells.size(); c = next++) work(c);
      });
    for (auto& t : pool) t.join();
  }

  std::string csv = "metric,method,case,d,rep,value,status\n";
  std::size_t failed = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (const auto& r : results[c]) {
      if (r.status != "ok") ++failed;
      csv += r.metric + "," + r.method + "," + sflags.regression_case + "," + short_real(grid[cells[c].d_index]) + "," +
             std::to_string(cells[c].rep + 1) + "," + (std::isnan(r.value) ? std::string() : io::format_real(r.value)) +
             "," + r.status + "\n";
    }
  }
  io::write_atomic(out_path, csv);
  m.config = io::config_to_json(base);
  m.outputs = {out_path};
  m.seed = fflags.seed;
  m.extra["cells"] = cells.size();
  m.extra["failed_cells"] = failed;
  m.write(sibling(out_path, ".manifest.json"));
  out << "experiment: " << cells.size() << " cells, " << failed << " failed\n";
  return failed == cells.size() ? kExitNumerical : kExitOk;
}

// ----------------------------------------------------------- select-k

int cmd_select_k(const FitFlags& flags, const std::string& data_path, const std::string& candidates, double split,
                 const std::string& out_path, Manifest m, std::ostream& out, std::ostream& err) {
  std::vector<int> ks;
  for (const auto& s : split_list(candidates)) {
    try {
      std::size_t used = 0;
      const int k = std::stoi(s, &used);
      if (used != s.size() || k < 1) throw std::invalid_argument(s);
      ks.push_back(k);
    } catch (const std::logic_error&) {
      throw DomainError("invalid candidate '" + s + "' in --k-candidates");
    }
  }
  if (ks.empty()) throw DomainError("--k-candidates is empty");
  const auto cfg = flags.config();
  const auto data = io::read_dataset_csv(data_path);
  const auto [train, test] = train_test_split(data, split, cfg.seed);
  const auto sel = select_k(train, test, ks, cfg);
  for (const auto& w : sel.warnings) err << "warning: " << w << "\n";

  std::string csv = "k,group,n_test,mse,mean_mse\n";
  for (const auto& r : sel.losses)
    csv += std::to_string(r.k) + "," + std::to_string(r.group) + "," + std::to_string(r.n_test) + "," +
           (r.n_test > 0 ? io::format_real(r.mse) : std::string()) + "," + io::format_real(r.mean_mse) + "\n";
  io::write_atomic(out_path, csv);
  m.config = io::config_to_json(cfg);
  m.inputs = {data_path};
  m.outputs = {out_path};
  m.seed = cfg.seed;
  m.extra["train_size"] = train.n();
  m.extra["test_size"] = test.n();
  m.extra["best_k"] = sel.best_k;
  m.extra["warnings"] = sel.warnings;
  m.write(sibling(out_path, ".manifest.json"));
  out << "best_k=" << sel.best_k << "\n";
  return kExitOk;
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> out;
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
      return v;
    } catch (const std::logic_error&) {
      throw DomainError("invalid number '" + s + "' in grid '" + spec + "'");
    }
  };
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream ss(spec);
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw DomainError("grid '" + spec + "' must be start:stop:step");
    const double a = number(parts[0]), b = number(parts[1]), step = number(parts[2]);
    if (!(step > 0.0) || b < a) throw DomainError("grid '" + spec + "' needs step > 0 and stop >= start");
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
    for (long i = 0; i < count; ++i) out.push_back(a + static_cast<double>(i) * step);
  } else {
    for (const auto& s : split_list(spec)) out.push_back(number(s));
  }
  if (out.empty()) throw DomainError("empty grid");
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regularized joint mixture models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  FitFlags fit_flags;
  std::string data_path, out_path, model_path, out_dir, candidates = "2,3,4", d_grid = "0.5";
  std::string schemes = "nj", baselines_list;
  double split = 0.8;
  int reps = 1;
  SimFlags sim_flags;

  auto* fit = app.add_subcommand("fit", "Fit a joint mixture model");
  fit->add_option("--data", data_path, "CSV with header y,x1,...,xp")->required();
  fit->add_option("--out", out_path, "Model JSON path")->required();
  fit_flags.add_to(*fit, true);

  auto* predict = app.add_subcommand("predict", "Allocate new rows and predict responses");
  predict->add_option("--model", model_path, "Model JSON from fit")->required();
  predict->add_option("--data", data_path, "CSV of features (a y column is ignored)")->required();
  predict->add_option("--out", out_path, "Prediction CSV path")->required();

  std::uint64_t sim_seed = 1;
  auto* simulate = app.add_subcommand("simulate", "Generate a simulated dataset");
  sim_flags.add_to(*simulate);
  simulate->add_option("--seed", sim_seed, "Random seed");
  simulate->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* experiment = app.add_subcommand("experiment", "Sweep methods over a mean-shift grid");
  SimFlags exp_sim;
  FitFlags exp_fit;
  exp_sim.add_to(*experiment);
  exp_fit.add_to(*experiment, false);
  experiment->add_option("--d-grid", d_grid, "start:stop:step or a comma list");
  experiment->add_option("--reps", reps, "Repetitions per grid point");
  experiment->add_option("--schemes", schemes, "Comma list of nj, flasso, rlasso");
  experiment->add_option("--baselines", baselines_list, "Comma list of kmeans, gmm");
  experiment->add_option("--out", out_path, "Results CSV path")->required();

  auto* select = app.add_subcommand("select-k", "Choose the number of groups by held-out prediction error");
  select->add_option("--data", data_path, "CSV with header y,x1,...,xp")->required();
  select->add_option("--k-candidates", candidates, "Comma list of candidate group counts");
  select->add_option("--split", split, "Training fraction");
  select->add_option("--out", out_path, "Loss table CSV path")->required();
  fit_flags.add_to(*select, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  Manifest m;
  m.argv = args;
  try {
    if (fit->parsed()) {
      m.command = "fit";
      return cmd_fit(fit_flags, data_path, out_path, m, out);
    }
    if (predict->parsed()) {
      m.command = "predict";
      return cmd_predict(model_path, data_path, out_path, m, out);
    }
    if (simulate->parsed()) {
      m.command = "simulate";
      return cmd_simulate(sim_flags, sim_seed, out_dir, m, out);
    }
    if (experiment->parsed()) {
      m.command = "experiment";
      return cmd_experiment(exp_sim, exp_fit, d_grid, reps, schemes, baselines_list, out_path, m, out);
    }
    m.command = "select-k";
    return cmd_select_k(fit_flags, data_path, candidates, split, out_path, m, out, err);
  } catch (const io::DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace rjm::cli
