#include "rjm/sparse_regression.hpp"

#include "rjm/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rjm::regression {
namespace {

double soft(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double weight_sum(const Vector& w, const char* who) {
  if (!w.allFinite() || (w.array() < 0.0).any()) throw DomainError(std::string(who) + ": weights must be finite and non-negative");
  const double s = w.sum();
  if (!(s > 0.0)) throw DomainError(std::string(who) + ": weights sum to zero");
  return s;
}

void check_shapes(const Vector& y, const Matrix& x, const Vector& w, const char* who) {
  if (x.rows() != y.size() || w.size() != y.size()) throw DomainError(std::string(who) + ": shape mismatch");
}

// Solves a symmetric positive-definite system, adding diagonal jitter once if
// the factorization fails.
Vector spd_solve(Matrix a, const Vector& b, const char* who) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-10 * std::max(a.trace() / static_cast<double>(a.rows()), 1e-300);
    a.diagonal().array() += jitter;
    llt.compute(a);
    if (llt.info() != Eigen::Success) throw DomainError(std::string(who) + ": singular system after jitter");
  }
  return llt.solve(b);
}

}  // namespace

double lasso_kkt_violation(const Matrix& gram, const Vector& c, double lambda, const Vector& phi) {
  const Vector g = c - gram * phi;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < phi.size(); ++j) {
    double v;
    if (phi(j) == 0.0) {
      v = std::max(0.0, std::abs(g(j)) - lambda);
    } else {
      v = std::abs(g(j) - lambda * (phi(j) > 0.0 ? 1.0 : -1.0));
    }
    worst = std::max(worst, v);
  }
  return worst;
}

Vector lasso_cd_gram(const Matrix& gram, const Vector& c, double lambda, double tol, int max_sweeps,
                     const Vector* warm_start) {
  const Eigen::Index p = c.size();
  if (gram.rows() != p || gram.cols() != p) throw DomainError("lasso: Gram matrix shape mismatch");
  if (!(lambda >= 0.0)) throw DomainError("lasso: lambda must be non-negative");
  Vector phi = Vector::Zero(p);
  if (warm_start) {
    if (warm_start->size() != p) throw DomainError("lasso: warm start has wrong length");
    phi = *warm_start;
  }
  Vector gphi = gram * phi;
  double violation = lasso_kkt_violation(gram, c, lambda, phi);
  for (int sweep = 0; sweep < max_sweeps && violation > tol; ++sweep) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double gjj = gram(j, j);
      const double old = phi(j);
      double next = 0.0;
      if (gjj > 0.0) {
        const double partial = c(j) - (gphi(j) - gjj * old);
        next = soft(partial, lambda) / gjj;
      }
      const double delta = next - old;
      if (delta != 0.0) {
        gphi.noalias() += gram.col(j) * delta;
        phi(j) = next;
      }
    }
    // Recompute the fitted Gram product periodically to stop drift.
    if (sweep % 50 == 49) gphi.noalias() = gram * phi;
    violation = lasso_kkt_violation(gram, c, lambda, phi);
  }
  if (violation > tol) {
    std::ostringstream os;
    os << "lasso: no convergence after " << max_sweeps << " sweeps (KKT violation " << violation << ")";
    throw ConvergenceError(os.str(), Matrix(phi), violation);
  }
  return phi;
}

Vector weighted_lasso_cd(const WeightedLassoProblem& prob) {
  check_shapes(prob.y, prob.x, prob.weights, "weighted_lasso_cd");
  weight_sum(prob.weights, "weighted_lasso_cd");
  const Vector target = (prob.rho * prob.y).array() - prob.chi;
  const Matrix xw = prob.x.transpose() * prob.weights.asDiagonal();
  const Matrix gram = xw * prob.x;
  const Vector c = xw * target;
  return lasso_cd_gram(gram, c, prob.lambda, prob.tol, prob.max_sweeps, prob.warm_start);
}

double update_rho(const Vector& y, const Vector& weights, double chi, const Vector& phi, const Matrix& x,
                  Eigen::Index p_dim) {
  check_shapes(y, x, weights, "update_rho");
  const double n_k = weight_sum(weights, "update_rho");
  const double a = (weights.array() * y.array().square()).sum();
  if (!(a > 0.0)) throw DomainError("update_rho: y'My must be positive");
  const Vector fitted = (x * phi).array() + chi;
  const double b = (weights.array() * y.array() * fitted.array()).sum();
  const double c = n_k + static_cast<double>(p_dim) + 2.0;
  const double root = std::sqrt(b * b + 4.0 * a * c);
  // Positive root of a rho^2 - b rho - c = 0, in a cancellation-free form.
  return b >= 0.0 ? (b + root) / (2.0 * a) : (2.0 * c) / (root - b);
}

double update_chi(const Vector& y, const Matrix& x, const Vector& weights, double rho, const Vector& phi) {
  check_shapes(y, x, weights, "update_chi");
  const double n_k = weight_sum(weights, "update_chi");
  const Vector r = rho * y - x * phi;
  return weights.dot(r) / n_k;
}

double rlasso_lambda(double beta_l1, double sigma, Eigen::Index p_dim, double n_k, double c) {
  if (!(beta_l1 >= 0.0) || !(sigma > 0.0) || !(n_k > 0.0) || !(c > 0.0) || p_dim < 1)
    throw DomainError("rlasso_lambda: invalid argument");
  const double universal = sigma * std::sqrt(2.0 * std::log(static_cast<double>(p_dim)) / n_k);
  return c * universal / std::max(beta_l1, kRLassoBetaFloor);
}

PlainLassoFit fit_lasso(const Matrix& x, const Vector& y, double lambda) {
  if (x.rows() != y.size() || x.rows() == 0) throw DomainError("fit_lasso: shape mismatch");
  const double n = static_cast<double>(x.rows());
  const Eigen::RowVectorXd xm = x.colwise().mean();
  const double ym = y.mean();
  const Matrix xc = x.rowwise() - xm;
  const Vector yc = y.array() - ym;
  const Matrix gram = xc.transpose() * xc;
  const Vector c = xc.transpose() * yc;
  PlainLassoFit out;
  out.beta = lasso_cd_gram(gram, c, n * lambda, 1e-9 * std::max(1.0, n), 100000);
  out.intercept = ym - xm.dot(out.beta);
  return out;
}

Vector lasso_lambda_grid(const Matrix& x, const Vector& y, int grid_size) {
  if (grid_size < 2) throw DomainError("lasso grid: need at least two points");
  const double n = static_cast<double>(x.rows());
  const Vector yc = y.array() - y.mean();
  double lmax = (x.transpose() * yc).cwiseAbs().maxCoeff() / n;
  if (!(lmax > 0.0)) lmax = 1e-8;
  Vector grid(grid_size);
  for (int i = 0; i < grid_size; ++i) grid(i) = lmax * std::pow(10.0, -4.0 * i / (grid_size - 1));
  return grid;
}

LassoCvResult cv_lasso(const Matrix& x, const Vector& y, int folds, int grid_size, std::uint64_t seed) {
  const Eigen::Index n = x.rows();
  if (folds < 2) throw DomainError("cv_lasso: need at least two folds");
  if (n < folds) throw DomainError("cv_lasso: fewer samples than folds");
  LassoCvResult out;
  out.grid = lasso_lambda_grid(x, y, grid_size);
  out.cv_error = Vector::Zero(grid_size);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng = make_rng(seed, {0xcf});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (std::size_t r = 0; r < order.size(); ++r) fold_of[static_cast<std::size_t>(order[r])] = static_cast<int>(r % folds);

  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i) (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    Matrix xt(static_cast<Eigen::Index>(train.size()), x.cols());
    Vector yt(static_cast<Eigen::Index>(train.size()));
    for (std::size_t r = 0; r < train.size(); ++r) {
      xt.row(static_cast<Eigen::Index>(r)) = x.row(train[r]);
      yt(static_cast<Eigen::Index>(r)) = y(train[r]);
    }
    const double nt = static_cast<double>(train.size());
    const Eigen::RowVectorXd xm = xt.colwise().mean();
    const double ym = yt.mean();
    const Matrix xc = xt.rowwise() - xm;
    const Vector yc = yt.array() - ym;
    const Matrix gram = xc.transpose() * xc;
    const Vector c = xc.transpose() * yc;
    Vector b = Vector::Zero(x.cols());
    double fold_sse = 0.0;
    for (int g = 0; g < grid_size; ++g) {
      b = lasso_cd_gram(gram, c, nt * out.grid(g), 1e-9 * std::max(1.0, nt), 100000, &b);
      fold_sse = 0.0;
      for (auto i : test) {
        const double pred = ym + (x.row(i) - xm).dot(b);
        fold_sse += (y(i) - pred) * (y(i) - pred);
      }
      out.cv_error(g) += fold_sse / static_cast<double>(test.size()) / folds;
    }
  }
  out.cv_error.minCoeff(&out.best_index);
  out.lambda = out.grid(out.best_index);
  out.fit = fit_lasso(x, y, out.lambda);
  return out;
}

Vector flasso_cv(const Matrix& x, const Vector& y, const std::vector<int>& labels, int k, int folds, int grid_size,
                 std::uint64_t seed) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) throw DomainError("flasso_cv: labels length mismatch");
  Vector out(k);
  for (int g = 0; g < k; ++g) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == g) rows.push_back(static_cast<Eigen::Index>(i));
    if (static_cast<int>(rows.size()) < folds) {
      std::ostringstream os;
      os << "flasso_cv: group " << (g + 1) << " has " << rows.size() << " members, fewer than " << folds << " folds";
      throw DomainError(os.str());
    }
    Matrix xg(static_cast<Eigen::Index>(rows.size()), x.cols());
    Vector yg(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      xg.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
      yg(static_cast<Eigen::Index>(r)) = y(rows[r]);
    }
    out(g) = cv_lasso(xg, yg, folds, grid_size, derive_seed(seed, {static_cast<std::uint64_t>(g)})).lambda;
  }
  return out;
}

NJState NJState::from_beta(const Vector& beta) {
  NJState s;
  s.u_diag = beta.array().square();
  s.zero_mask.assign(static_cast<std::size_t>(beta.size()), false);
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (s.u_diag(j) < kNJZeroThreshold) {
      s.zero_mask[static_cast<std::size_t>(j)] = true;
      s.u_diag(j) = 0.0;
    }
  }
  return s;
}

Eigen::Index NJState::active_count() const {
  return static_cast<Eigen::Index>(std::count(zero_mask.begin(), zero_mask.end(), false));
}

double nj_sigma_update(const Vector& y, const Matrix& x, const Vector& weights, double alpha_prev,
                       const Vector& beta_prev) {
  check_shapes(y, x, weights, "nj_sigma_update");
  const double n_k = weight_sum(weights, "nj_sigma_update");
  const Vector r = (y - x * beta_prev).array() - alpha_prev;
  const double rss = (weights.array() * r.array().square()).sum();
  return std::max(rss / (n_k + 2.0), kSigma2Floor);
}

double nj_alpha_update(const Vector& y, const Matrix& x, const Vector& weights, const Vector& beta_prev) {
  check_shapes(y, x, weights, "nj_alpha_update");
  const double n_k = weight_sum(weights, "nj_alpha_update");
  return weights.dot(y - x * beta_prev) / n_k;
}

Vector nj_beta_primal(const Vector& y, const Matrix& x, const Vector& weights, double sigma2, double alpha,
                      const Vector& u_diag) {
  check_shapes(y, x, weights, "nj_beta_primal");
  const Eigen::Index p = x.cols();
  const Vector u_half = u_diag.cwiseSqrt();
  const Matrix xw = x.transpose() * weights.asDiagonal();
  Matrix a = u_half.asDiagonal() * (xw * x) * u_half.asDiagonal();
  a.diagonal().array() += sigma2;
  const Vector rhs = u_half.asDiagonal() * (xw * (y.array() - alpha).matrix());
  const Vector inner = spd_solve(std::move(a), rhs, "nj_beta_primal");
  Vector beta = u_half.asDiagonal() * inner;
  if (beta.size() != p) throw DomainError("nj_beta_primal: dimension mismatch");
  return beta;
}

Vector nj_beta_dual(const Vector& y, const Matrix& x, const Vector& weights, double sigma2, double alpha,
                    const Vector& u_diag) {
  check_shapes(y, x, weights, "nj_beta_dual");
  const Vector w_half = weights.cwiseSqrt();
  const Matrix xt = w_half.asDiagonal() * x;                        // M^{1/2} X
  const Vector zt = w_half.asDiagonal() * (y.array() - alpha).matrix();  // M^{1/2} (y - alpha)
  const Vector g = xt.transpose() * zt;                             // X'M (y - alpha)
  const Matrix xu = xt * u_diag.asDiagonal();                       // X~ U
  Matrix inner = xu * xt.transpose();
  inner.diagonal().array() += sigma2;
  const Vector t = spd_solve(std::move(inner), xu * g, "nj_beta_dual");
  const Vector bracket = g - xt.transpose() * t;
  return (u_diag.asDiagonal() * bracket) / sigma2;
}

std::pair<Vector, NJState> nj_beta_update(const Vector& y, const Matrix& x, const Vector& weights, double sigma2_new,
                                          double alpha_new, const NJState& state) {
  check_shapes(y, x, weights, "nj_beta_update");
  weight_sum(weights, "nj_beta_update");
  if (!(sigma2_new > 0.0)) throw DomainError("nj_beta_update: sigma2 must be positive");
  const Eigen::Index p = x.cols();
  if (state.u_diag.size() != p || static_cast<Eigen::Index>(state.zero_mask.size()) != p)
    throw DomainError("nj_beta_update: state has wrong dimension");

  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < p; ++j)
    if (!state.zero_mask[static_cast<std::size_t>(j)]) active.push_back(j);

  Vector beta = Vector::Zero(p);
  NJState next = state;
  if (active.empty()) return {beta, next};

  const auto na = static_cast<Eigen::Index>(active.size());
  Matrix xa(x.rows(), na);
  Vector ua(na);
  for (Eigen::Index c = 0; c < na; ++c) {
    xa.col(c) = x.col(active[static_cast<std::size_t>(c)]);
    ua(c) = state.u_diag(active[static_cast<std::size_t>(c)]);
  }
  const Vector ba = x.rows() >= p ? nj_beta_primal(y, xa, weights, sigma2_new, alpha_new, ua)
                                  : nj_beta_dual(y, xa, weights, sigma2_new, alpha_new, ua);
  for (Eigen::Index c = 0; c < na; ++c) {
    const auto j = active[static_cast<std::size_t>(c)];
    const double b = ba(c);
    const double b2 = b * b;
    if (b2 < kNJZeroThreshold) {
      next.zero_mask[static_cast<std::size_t>(j)] = true;
      next.u_diag(j) = 0.0;
      next.absorbed_log_penalty += -std::log(std::max(std::abs(b), 1e-300));
      beta(j) = 0.0;
    } else {
      next.u_diag(j) = b2;
      beta(j) = b;
    }
  }
  return {beta, next};
}

}  // namespace rjm::regression
