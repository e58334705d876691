#pragma once

#include "rjm/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace rjm::regression {

/// Weighted lasso in the scaled parametrization:
///   minimize 0.5 * sum_i w_i (rho y_i - chi - x_i' phi)^2 + lambda |phi|_1
struct WeightedLassoProblem {
  const Matrix& x;
  const Vector& y;
  const Vector& weights;
  double chi = 0.0;
  double rho = 1.0;
  double lambda = 0.0;
  double tol = 1e-7;
  int max_sweeps = 1000;
  /// Optional starting point; coordinate descent from here never increases
  /// the objective.
  const Vector* warm_start = nullptr;
};

/// Coordinate descent with covariance updates. The returned phi satisfies
/// the per-coordinate soft-threshold stationarity conditions within tol.
Vector weighted_lasso_cd(const WeightedLassoProblem& prob);

/// Same solver on a precomputed Gram system: minimize
/// 0.5 phi' G phi - c' phi + lambda |phi|_1.
Vector lasso_cd_gram(const Matrix& gram, const Vector& c, double lambda, double tol, int max_sweeps,
                     const Vector* warm_start = nullptr);

/// Largest per-coordinate KKT violation of a Gram-form lasso solution.
double lasso_kkt_violation(const Matrix& gram, const Vector& c, double lambda, const Vector& phi);

/// Maximizer of -0.5 rho^2 y'My + rho y'M(chi 1 + X phi) + (n_k + p + 2) log rho.
double update_rho(const Vector& y, const Vector& weights, double chi, const Vector& phi, const Matrix& x,
                  Eigen::Index p_dim);

/// Weighted mean of rho y - X phi.
double update_chi(const Vector& y, const Matrix& x, const Vector& weights, double rho, const Vector& phi);

/// Below this l1 norm the random-penalty update is capped.
inline constexpr double kRLassoBetaFloor = 1e-8;

/// Random-penalty lasso update: (c / |beta|_1) * sigma * sqrt(2 log p / n_k).
double rlasso_lambda(double beta_l1, double sigma, Eigen::Index p_dim, double n_k, double c);

struct PlainLassoFit {
  double intercept = 0.0;
  Vector beta;
};

/// Lasso with unpenalized intercept, penalty on the per-sample scale:
///   minimize (1 / 2n) |y - a - X b|^2 + lambda |b|_1
PlainLassoFit fit_lasso(const Matrix& x, const Vector& y, double lambda);

struct LassoCvResult {
  Vector grid;
  Vector cv_error;
  double lambda = 0.0;
  Eigen::Index best_index = 0;
  PlainLassoFit fit;
};

/// Log-spaced grid from max_j |x_j'(y - ybar)| / n down four decades.
Vector lasso_lambda_grid(const Matrix& x, const Vector& y, int grid_size);

/// K-fold cross-validation of fit_lasso over lasso_lambda_grid(); returns
/// the grid point with the smallest mean held-out squared error and the
/// full-data refit at that point.
LassoCvResult cv_lasso(const Matrix& x, const Vector& y, int folds, int grid_size, std::uint64_t seed);

/// Per-group cross-validated penalties (per-sample scale) for the hard
/// partition given by 0-based labels in [0, k).
Vector flasso_cv(const Matrix& x, const Vector& y, const std::vector<int>& labels, int k, int folds, int grid_size,
                 std::uint64_t seed);

/// Coefficients with beta_j^2 below this are fixed at zero for the rest of
/// the run.
inline constexpr double kNJZeroThreshold = 1e-10;
inline constexpr double kSigma2Floor = 1e-12;

/// Latent-scale state of the normal-Jeffreys updates: u_diag = beta^2 from
/// the previous iterate, zero_mask marks absorbed coefficients.
struct NJState {
  Vector u_diag;
  std::vector<bool> zero_mask;
  /// Sum of -log|beta_j| frozen at the iteration each coefficient was
  /// absorbed; keeps the penalized objective continuous across absorption.
  double absorbed_log_penalty = 0.0;

  static NJState from_beta(const Vector& beta);
  Eigen::Index active_count() const;
};

double nj_sigma_update(const Vector& y, const Matrix& x, const Vector& weights, double alpha_prev,
                       const Vector& beta_prev);

double nj_alpha_update(const Vector& y, const Matrix& x, const Vector& weights, const Vector& beta_prev);

/// beta = U^{1/2} (s2 I + U^{1/2} X'MX U^{1/2})^{-1} U^{1/2} X'M (y - alpha 1)
Vector nj_beta_primal(const Vector& y, const Matrix& x, const Vector& weights, double sigma2, double alpha,
                      const Vector& u_diag);

/// beta = s2^{-1} U [I - X'(s2 M^{-1} + X U X')^{-1} X U] X'M (y - alpha 1),
/// evaluated through M^{1/2} so zero weights are admissible.
Vector nj_beta_dual(const Vector& y, const Matrix& x, const Vector& weights, double sigma2, double alpha,
                    const Vector& u_diag);

/// Normal-Jeffreys coefficient update. Uses the p x p system when n >= p and
/// the n x n system otherwise; absorbed coefficients stay exactly zero.
std::pair<Vector, NJState> nj_beta_update(const Vector& y, const Matrix& x, const Vector& weights, double sigma2_new,
                                          double alpha_new, const NJState& state);

}  // namespace rjm::regression
