#include "rjm/em.hpp"

#include "rjm/baselines.hpp"
#include "rjm/glasso.hpp"
#include "rjm/random.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace rjm::em {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

std::string group_tag(Eigen::Index k) { return "group " + std::to_string(k + 1) + ": "; }

// Quadratic forms (x_i - mu)' Omega (x_i - mu) for every row.
Vector quad_forms(const Matrix& x, const ClusterParams& c) {
  Eigen::LLT<Matrix> llt(c.omega);
  if (llt.info() != Eigen::Success) throw DomainError("precision matrix is not positive definite");
  const Matrix d = x.rowwise() - c.mu.transpose();
  const Matrix dl = d * llt.matrixL();
  return dl.rowwise().squaredNorm();
}

Vector residuals(const Dataset& data, const ClusterParams& c) {
  return (data.y - data.x * c.beta).array() - c.alpha;
}

double rlasso_shape(double c, Eigen::Index p, double n_k) {
  return c * std::sqrt(2.0 * std::log(static_cast<double>(p)) / n_k);
}

// shape * log(lambda), with the 0 * log(0) case taken as 0.
double pareto_term(double shape, double lambda) {
  if (shape == 0.0) return 0.0;
  return shape * std::log(lambda);
}

std::vector<int> to_one_based(std::vector<int> labels) {
  for (auto& l : labels) ++l;
  return labels;
}

int count_changes(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return static_cast<int>(a.size());
  int changes = 0;
  for (std::size_t i = 0; i < a.size(); ++i) changes += a[i] != b[i];
  return changes;
}

}  // namespace

double universal_psi(Eigen::Index n, Eigen::Index p) {
  return std::sqrt(2.0 * static_cast<double>(n) * std::log(static_cast<double>(p))) / 2.0;
}

double resolve_psi(const FitConfig& config, Eigen::Index n, Eigen::Index p) {
  return config.psi ? *config.psi : universal_psi(n, p);
}

Matrix log_joint(const Dataset& data, const std::vector<ClusterParams>& params) {
  const Eigen::Index n = data.n();
  const auto p = static_cast<double>(data.p());
  Matrix out(n, static_cast<Eigen::Index>(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& c = params[k];
    const Vector r = residuals(data, c);
    const Vector q = quad_forms(data.x, c);
    const double base = std::log(c.tau) - 0.5 * (kLog2Pi + std::log(c.sigma2)) +
                        0.5 * (c.log_det_omega - p * kLog2Pi);
    out.col(static_cast<Eigen::Index>(k)) = (base - 0.5 * (r.array().square() / c.sigma2 + q.array())).matrix();
  }
  return out;
}

EStep e_step_full(const Dataset& data, const std::vector<ClusterParams>& params) {
  const Matrix lj = log_joint(data, params);
  Matrix m(lj.rows(), lj.cols());
  double ll = 0.0;
  for (Eigen::Index i = 0; i < lj.rows(); ++i) {
    const double mx = lj.row(i).maxCoeff();
    if (!std::isfinite(mx)) {
      std::ostringstream os;
      os << "e-step: sample " << (i + 1) << " has no finite component log-density";
      throw DomainError(os.str());
    }
    const Eigen::RowVectorXd e = (lj.row(i).array() - mx).exp();
    const double s = e.sum();
    m.row(i) = e / s;
    ll += mx + std::log(s);
  }
  return {Responsibilities(std::move(m)), ll};
}

Responsibilities e_step(const Dataset& data, const std::vector<ClusterParams>& params) {
  return e_step_full(data, params).resp;
}

Matrix weighted_covariance(const Matrix& x, const Vector& w, const Vector& mu) {
  const double total = w.sum();
  if (!(total > 0.0)) throw DomainError("weighted_covariance: weights sum to zero");
  const Matrix d = x.rowwise() - mu.transpose();
  Matrix s = d.transpose() * w.asDiagonal() * d / total;
  return 0.5 * (s + s.transpose());
}

void m_step_x(const Dataset& data, const Responsibilities& resp, double psi, std::vector<ClusterParams>& params,
              int glasso_max_sweeps, double glasso_tol) {
  const auto n = static_cast<double>(data.n());
  for (Eigen::Index k = 0; k < resp.k(); ++k) {
    auto& c = params[static_cast<std::size_t>(k)];
    const double nk = resp.n_k(k);
    if (!(nk > 0.0)) throw DomainError(group_tag(k) + "empty group in M-step");
    const Vector w = resp.weights(k);
    c.tau = nk / n;
    c.mu = data.x.transpose() * w / nk;
    const Matrix s = weighted_covariance(data.x, w, c.mu);
    const double zeta = psi / nk;
    Matrix omega;
    try {
      omega = glasso::solve({s, zeta, glasso_max_sweeps, glasso_tol});
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(group_tag(k) + e.what(), e.last_iterate(), e.residual());
    } catch (const DomainError& e) {
      throw DomainError(group_tag(k) + e.what());
    }
    if (glasso::objective(s, zeta, omega) >= glasso::objective(s, zeta, c.omega)) c.set_omega(omega);
  }
}

void m_step_y(const Dataset& data, const Responsibilities& resp, const FitConfig& config, EmState& state) {
  const Eigen::Index p = data.p();
  for (Eigen::Index k = 0; k < resp.k(); ++k) {
    auto& c = state.params[static_cast<std::size_t>(k)];
    const Vector w = resp.weights(k);
    const double nk = resp.n_k(k);
    try {
      if (config.scheme == Scheme::NJ) {
        auto& st = state.nj[static_cast<std::size_t>(k)];
        c.sigma2 = regression::nj_sigma_update(data.y, data.x, w, c.alpha, c.beta);
        c.alpha = regression::nj_alpha_update(data.y, data.x, w, c.beta);
        auto [beta, next] = regression::nj_beta_update(data.y, data.x, w, c.sigma2, c.alpha, st);
        c.beta = std::move(beta);
        st = std::move(next);
        continue;
      }
      if (config.scheme == Scheme::RLasso) {
        c.lambda = regression::rlasso_lambda(c.beta.lpNorm<1>(), std::sqrt(c.sigma2), p, nk, config.c);
      }
      const ScaledRegression prev = to_scaled(c.alpha, c.beta, c.sigma2);
      ScaledRegression next;
      next.rho = regression::update_rho(data.y, w, prev.chi, prev.phi, data.x, p);
      next.chi = regression::update_chi(data.y, data.x, w, next.rho, prev.phi);
      regression::WeightedLassoProblem prob{data.x, data.y, w};
      prob.chi = next.chi;
      prob.rho = next.rho;
      prob.lambda = c.lambda.value_or(0.0);
      prob.max_sweeps = 20000;
      prob.warm_start = &prev.phi;
      next.phi = regression::weighted_lasso_cd(prob);
      const auto nat = from_scaled(next);
      c.alpha = nat.alpha;
      c.beta = nat.beta;
      c.sigma2 = nat.sigma2;
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(group_tag(k) + e.what(), e.last_iterate(), e.residual());
    } catch (const DomainError& e) {
      throw DomainError(group_tag(k) + e.what());
    }
  }
}

ObjectiveParts objective_parts(const Dataset& data, const std::vector<ClusterParams>& params,
                               const Responsibilities& resp, Scheme scheme, double psi, double c,
                               const std::vector<regression::NJState>* nj) {
  if (resp.n() != data.n() || resp.k() != static_cast<Eigen::Index>(params.size()))
    throw DomainError("objective: responsibilities do not match data and parameters");
  const Eigen::Index p = data.p();
  ObjectiveParts q;
  for (std::size_t ks = 0; ks < params.size(); ++ks) {
    const auto k = static_cast<Eigen::Index>(ks);
    const auto& cl = params[ks];
    const Vector w = resp.weights(k);
    const double nk = resp.n_k(k);

    q.z += nk * std::log(cl.tau);

    const Vector quad = quad_forms(data.x, cl);
    q.x += 0.5 * (nk * cl.log_det_omega - w.dot(quad) - psi * cl.omega.cwiseAbs().sum());

    const Vector r = residuals(data, cl);
    if (scheme == Scheme::NJ) {
      const auto st = nj ? (*nj)[ks] : regression::NJState::from_beta(cl.beta);
      double ridge = 0.0;
      for (Eigen::Index j = 0; j < p; ++j)
        if (!st.zero_mask[static_cast<std::size_t>(j)]) ridge += cl.beta(j) * cl.beta(j) / st.u_diag(j);
      q.y += -0.5 * (w.dot(r.cwiseAbs2()) / cl.sigma2 + ridge + (nk + 2.0) * std::log(cl.sigma2));
    } else {
      const double rho = 1.0 / std::sqrt(cl.sigma2);
      const double lambda = cl.lambda.value_or(0.0);
      double term = -0.5 * rho * rho * w.dot(r.cwiseAbs2()) - lambda * rho * cl.beta.lpNorm<1>() +
                    (nk + static_cast<double>(p) + 2.0) * std::log(rho);
      if (scheme == Scheme::RLasso) term += pareto_term(rlasso_shape(c, p, nk), lambda);
      q.y += term;
    }
  }
  return q;
}

double objective(const Dataset& data, const std::vector<ClusterParams>& params, const Responsibilities& resp,
                 Scheme scheme, double psi, double c, const std::vector<regression::NJState>* nj) {
  return objective_parts(data, params, resp, scheme, psi, c, nj).total();
}

double log_prior(const std::vector<ClusterParams>& params, const Vector& n_k, Scheme scheme, double psi, double c,
                 const std::vector<regression::NJState>* nj) {
  double out = 0.0;
  for (std::size_t ks = 0; ks < params.size(); ++ks) {
    const auto& cl = params[ks];
    const Eigen::Index p = cl.beta.size();
    out -= 0.5 * psi * cl.omega.cwiseAbs().sum();
    if (scheme == Scheme::NJ) {
      const auto st = nj ? (*nj)[ks] : regression::NJState::from_beta(cl.beta);
      for (Eigen::Index j = 0; j < p; ++j)
        if (!st.zero_mask[static_cast<std::size_t>(j)]) out -= std::log(std::abs(cl.beta(j)));
      out += st.absorbed_log_penalty - std::log(cl.sigma2);
    } else {
      const double rho = 1.0 / std::sqrt(cl.sigma2);
      const double lambda = cl.lambda.value_or(0.0);
      out += -lambda * rho * cl.beta.lpNorm<1>() + (static_cast<double>(p) + 2.0) * std::log(rho);
      if (scheme == Scheme::RLasso) out += pareto_term(rlasso_shape(c, p, n_k(static_cast<Eigen::Index>(ks))), lambda);
    }
  }
  return out;
}

double penalized_loglik(const Dataset& data, const std::vector<ClusterParams>& params, Scheme scheme, double psi,
                        double c, const std::vector<regression::NJState>* nj) {
  const auto es = e_step_full(data, params);
  return es.loglik + log_prior(params, es.resp.n_k, scheme, psi, c, nj);
}

EmState initialize(const Dataset& data, const FitConfig& config, int start_index) {
  config.validate();
  data.validate();
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const int k = config.k;
  if (n < static_cast<Eigen::Index>(k) * kMinInitClusterSize)
    throw FitError("initialization: need at least " + std::to_string(kMinInitClusterSize) + " samples per group");

  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  if (k > 1) {
    const Matrix z = baselines::standardize(data.x);
    bool ok = false;
    for (int attempt = 0; attempt < 20 && !ok; ++attempt) {
      Rng rng = make_rng(config.seed, {0x6b6d, static_cast<std::uint64_t>(attempt)});
      labels = baselines::kmeans(z, k, 10, rng).labels;
      std::vector<int> sizes(static_cast<std::size_t>(k), 0);
      for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
      ok = *std::min_element(sizes.begin(), sizes.end()) >= kMinInitClusterSize;
    }
    if (!ok)
      throw FitError("initialization: k-means left a cluster with fewer than " +
                     std::to_string(kMinInitClusterSize) + " members after 20 attempts");
  }

  const double denom = std::max<double>(1.0, static_cast<double>(n) - 1.0);
  Vector sd_x(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double s = std::sqrt((data.x.col(j).array() - data.x.col(j).mean()).square().sum() / denom);
    sd_x(j) = s > 0.0 ? s : 1.0;
  }
  double sd_y = std::sqrt((data.y.array() - data.y.mean()).square().sum() / denom);
  if (!(sd_y > 0.0)) sd_y = 1.0;

  Rng noise = make_rng(config.seed, {0x7065, static_cast<std::uint64_t>(start_index)});
  std::normal_distribution<double> std_normal(0.0, 1.0);

  EmState state;
  state.psi = resolve_psi(config, n, p);
  state.params.resize(static_cast<std::size_t>(k));
  for (int g = 0; g < k; ++g) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < n; ++i)
      if (labels[static_cast<std::size_t>(i)] == g) rows.push_back(i);
    const Dataset sub = data.subset(rows);
    const auto nk = static_cast<double>(rows.size());
    auto& c = state.params[static_cast<std::size_t>(g)];

    c.tau = nk / static_cast<double>(n);
    c.mu = sub.x.colwise().mean().transpose();
    Matrix cov = weighted_covariance(sub.x, Vector::Ones(sub.n()), c.mu);
    const double mean_diag = cov.trace() / static_cast<double>(p);
    cov.diagonal().array() += std::max(0.1 * mean_diag, 1e-8);

    const Eigen::RowVectorXd xm = sub.x.colwise().mean();
    const Matrix xc = sub.x.rowwise() - xm;
    const Vector yc = sub.y.array() - sub.y.mean();
    Matrix gram = xc.transpose() * xc;
    gram.diagonal().array() += 1.0;
    c.beta = gram.ldlt().solve(xc.transpose() * yc);
    c.alpha = sub.y.mean() - xm.dot(c.beta);
    const Vector r = (sub.y - sub.x * c.beta).array() - c.alpha;
    c.sigma2 = std::max(r.squaredNorm() / nk, regression::kSigma2Floor);

    if (start_index > 0) {
      for (Eigen::Index j = 0; j < p; ++j) {
        c.mu(j) += 0.1 * sd_x(j) * std_normal(noise);
        c.beta(j) += 0.1 * (sd_y / sd_x(j)) * std_normal(noise);
        cov(j, j) *= 1.0 + std::abs(0.1 * std_normal(noise));
      }
      c.sigma2 *= std::exp(0.1 * std_normal(noise));
    }
    c.set_omega(cov.llt().solve(Matrix::Identity(p, p)));
  }
  double tau_sum = 0.0;
  for (const auto& c : state.params) tau_sum += c.tau;
  for (auto& c : state.params) c.tau /= tau_sum;

  if (config.scheme == Scheme::NJ) {
    state.nj.reserve(state.params.size());
    for (auto& c : state.params) {
      auto st = regression::NJState::from_beta(c.beta);
      for (Eigen::Index j = 0; j < p; ++j) {
        if (!st.zero_mask[static_cast<std::size_t>(j)]) continue;
        st.absorbed_log_penalty -= std::log(std::max(std::abs(c.beta(j)), 1e-300));
        c.beta(j) = 0.0;
      }
      state.nj.push_back(std::move(st));
    }
  } else if (config.scheme == Scheme::FLasso) {
    state.lambda_hat = regression::flasso_cv(data.x, data.y, labels, k, config.cv_folds, config.cv_grid_size,
                                             derive_seed(config.seed, {0x6376, 0}));
    for (int g = 0; g < k; ++g) {
      auto& c = state.params[static_cast<std::size_t>(g)];
      const double nk = c.tau * static_cast<double>(n);
      c.lambda = nk * state.lambda_hat(g) / std::sqrt(c.sigma2);
    }
  } else {
    for (auto& c : state.params) {
      const double nk = c.tau * static_cast<double>(n);
      c.lambda = regression::rlasso_lambda(c.beta.lpNorm<1>(), std::sqrt(c.sigma2), p, nk, config.c);
    }
  }

  const auto es = e_step_full(data, state.params);
  state.resp = es.resp;
  state.objective = es.loglik + log_prior(state.params, state.resp.n_k, config.scheme, state.psi, config.c,
                                          config.scheme == Scheme::NJ ? &state.nj : nullptr);
  state.prev_labels = labels;
  return state;
}

bool iterate(const Dataset& data, const FitConfig& config, EmState& state) {
  const auto labels_now = state.resp.hard_labels();
  if (config.scheme == Scheme::FLasso && state.phase == FLassoPhase::Initial) {
    const bool stable = state.iteration > 0 && labels_now == state.prev_labels;
    if (stable || state.iteration >= config.max_iter / 2) state.phase = FLassoPhase::Refit;
  }

  m_step_x(data, state.resp, state.psi, state.params);

  bool refit = false;
  if (state.phase == FLassoPhase::Refit) {
    try {
      state.lambda_hat = regression::flasso_cv(data.x, data.y, labels_now, config.k, config.cv_folds,
                                               config.cv_grid_size, derive_seed(config.seed, {0x6376, 1}));
      for (Eigen::Index k = 0; k < state.resp.k(); ++k) {
        auto& c = state.params[static_cast<std::size_t>(k)];
        c.lambda = state.resp.n_k(k) * state.lambda_hat(k) / std::sqrt(c.sigma2);
      }
      refit = true;
    } catch (const DomainError&) {
      // A group too small for cross-validation keeps its current penalty.
    }
    state.phase = FLassoPhase::Fixed;
  }

  m_step_y(data, state.resp, config, state);

  state.prev_labels = labels_now;
  const auto es = e_step_full(data, state.params);
  state.resp = es.resp;
  state.objective = es.loglik + log_prior(state.params, state.resp.n_k, config.scheme, state.psi, config.c,
                                          config.scheme == Scheme::NJ ? &state.nj : nullptr);
  ++state.iteration;
  return refit;
}

FitResult run_start(const Dataset& data, const FitConfig& config, int start_index, const ProgressFn& progress) {
  FitResult out;
  out.scheme = config.scheme;
  out.start_index = start_index;
  const auto n = static_cast<double>(data.n());
  const double guard = n / (config.min_group_frac_divisor * config.k);

  EmState state;
  auto finish = [&](bool discarded, std::string why) {
    out.params = state.params;
    out.resp = state.resp;
    if (state.resp.n() > 0) out.labels = to_one_based(state.resp.hard_labels());
    out.iterations = state.iteration;
    out.discarded = discarded;
    out.failure = std::move(why);
    return out;
  };
  auto collapsed = [&] { return state.resp.n_k.minCoeff() <= guard; };

  try {
    state = initialize(data, config, start_index);
  } catch (const std::exception& e) {
    return finish(true, e.what());
  }
  out.objective_trace.push_back(state.objective);
  if (collapsed()) return finish(true, "collapse guard fired at initialization");

  for (int t = 0; t < config.max_iter; ++t) {
    const auto before = state.resp.hard_labels();
    bool refit = false;
    try {
      refit = iterate(data, config, state);
    } catch (const std::exception& e) {
      return finish(true, e.what());
    }
    if (refit) out.refit_index = static_cast<int>(out.objective_trace.size());
    const double prev = out.objective_trace.back();
    const double cur = state.objective;
    out.objective_trace.push_back(cur);
    if (progress) {
      IterationRecord rec;
      rec.start_index = start_index;
      rec.iteration = state.iteration;
      rec.objective = cur;
      rec.n_k = state.resp.n_k;
      rec.label_changes = count_changes(before, state.resp.hard_labels());
      progress(rec);
    }
    if (!std::isfinite(cur)) return finish(true, "objective is not finite");
    if (collapsed()) return finish(true, "collapse guard fired");

    const double change = std::abs(prev) > 1e-12 ? std::abs(cur / prev - 1.0) : std::abs(cur - prev);
    const bool penalties_settled = config.scheme != Scheme::FLasso || state.phase == FLassoPhase::Fixed;
    if (change <= config.tol && penalties_settled && !refit) {
      out.converged = true;
      break;
    }
  }
  return finish(false, {});
}

std::vector<FitResult> run_starts(const Dataset& data, const FitConfig& config, const ProgressFn& progress) {
  config.validate();
  std::vector<FitResult> out(static_cast<std::size_t>(config.n_starts));
  std::mutex progress_mutex;
  ProgressFn locked;
  if (progress) {
    locked = [&](const IterationRecord& r) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      progress(r);
    };
  }
  const int workers = std::min(config.threads, config.n_starts);
  if (workers <= 1) {
    for (int s = 0; s < config.n_starts; ++s) out[static_cast<std::size_t>(s)] = run_start(data, config, s, locked);
    return out;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int s = next++; s < config.n_starts; s = next++)
        out[static_cast<std::size_t>(s)] = run_start(data, config, s, locked);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

FitResult fit(const Dataset& data, const FitConfig& config, const ProgressFn& progress) {
  auto runs = run_starts(data, config, progress);
  const FitResult* best = nullptr;
  for (const auto& r : runs) {
    if (r.discarded) continue;
    if (!best || r.objective_trace.back() > best->objective_trace.back()) best = &r;
  }
  if (!best) {
    std::ostringstream os;
    os << "all " << config.n_starts << " starts were discarded";
    if (!runs.empty() && !runs.front().failure.empty()) os << " (first: " << runs.front().failure << ")";
    os << "; try a smaller k or a different seed";
    throw FitError(os.str());
  }
  return *best;
}

}  // namespace rjm::em
