#pragma once

#include "rjm/sparse_regression.hpp"
#include "rjm/types.hpp"

#include <functional>
#include <vector>

namespace rjm::em {

/// sqrt(2 n log p) / 2.
double universal_psi(Eigen::Index n, Eigen::Index p);

/// The configured glasso penalty, or the universal one when unset.
double resolve_psi(const FitConfig& config, Eigen::Index n, Eigen::Index p);

/// n x K matrix of log tau_k + log N(y_i | alpha_k + x_i'beta_k, sigma2_k)
/// + log N_p(x_i | mu_k, Omega_k).
Matrix log_joint(const Dataset& data, const std::vector<ClusterParams>& params);

struct EStep {
  Responsibilities resp;
  /// Observed-data log-likelihood sum_i log sum_k exp(log_joint).
  double loglik = 0.0;
};

/// Row-normalised log_joint via log-sum-exp. Throws DomainError naming the
/// first row whose K log-densities are all -inf.
EStep e_step_full(const Dataset& data, const std::vector<ClusterParams>& params);
Responsibilities e_step(const Dataset& data, const std::vector<ClusterParams>& params);

/// sum_i w_i (x_i - mu)(x_i - mu)' / sum_i w_i
Matrix weighted_covariance(const Matrix& x, const Vector& w, const Vector& mu);

/// tau, mu and Omega updates. Omega_k solves the graphical lasso on the
/// weighted covariance with penalty psi / n_k; a solution scoring below the
/// current Omega_k on that objective is rejected.
void m_step_x(const Dataset& data, const Responsibilities& resp, double psi, std::vector<ClusterParams>& params,
              int glasso_max_sweeps = 200, double glasso_tol = 1e-5);

enum class FLassoPhase { Initial, Refit, Fixed };

struct EmState {
  std::vector<ClusterParams> params;
  Responsibilities resp;
  int iteration = 0;
  /// Penalized observed-data log-likelihood at params.
  double objective = 0.0;
  double psi = 0.0;
  FLassoPhase phase = FLassoPhase::Initial;
  /// Cross-validated penalties on the per-sample scale.
  Vector lambda_hat;
  std::vector<regression::NJState> nj;
  std::vector<int> prev_labels;
};

/// Regression block for every group, in the order lambda, rho, chi, phi
/// for the lasso schemes and sigma2, alpha, beta for NJ.
void m_step_y(const Dataset& data, const Responsibilities& resp, const FitConfig& config, EmState& state);

/// Expected complete-data penalized log-likelihood, additive constants
/// dropped. resp supplies the weights m_k and n_k; for NJ, `nj` supplies the
/// latent scales U_k of the expansion point.
struct ObjectiveParts {
  double y = 0.0;
  double x = 0.0;
  double z = 0.0;
  double total() const { return y + x + z; }
};

ObjectiveParts objective_parts(const Dataset& data, const std::vector<ClusterParams>& params,
                               const Responsibilities& resp, Scheme scheme, double psi, double c,
                               const std::vector<regression::NJState>* nj = nullptr);
double objective(const Dataset& data, const std::vector<ClusterParams>& params, const Responsibilities& resp,
                 Scheme scheme, double psi, double c, const std::vector<regression::NJState>* nj = nullptr);

/// Log-prior terms added to the observed-data log-likelihood. For NJ the
/// absorbed coefficients contribute the log-penalty frozen at absorption.
double log_prior(const std::vector<ClusterParams>& params, const Vector& n_k, Scheme scheme, double psi, double c,
                 const std::vector<regression::NJState>* nj);

/// Observed-data log-likelihood plus log_prior; the quantity traced by fit.
double penalized_loglik(const Dataset& data, const std::vector<ClusterParams>& params, Scheme scheme, double psi,
                        double c, const std::vector<regression::NJState>* nj = nullptr);

/// Minimum k-means cluster size accepted by initialize().
inline constexpr int kMinInitClusterSize = 5;

/// k-means++ on standardised X, then per-group moments and ridge
/// regressions. Starts with index > 0 add Gaussian perturbations.
EmState initialize(const Dataset& data, const FitConfig& config, int start_index);

/// One ECM pass: FLasso phase bookkeeping, m_step_x, m_step_y, E-step and
/// objective. Returns true when the FLasso penalties were re-estimated.
bool iterate(const Dataset& data, const FitConfig& config, EmState& state);

using ProgressFn = std::function<void(const IterationRecord&)>;

/// One complete EM run. Numerical failures and the collapse guard mark the
/// run discarded instead of throwing.
FitResult run_start(const Dataset& data, const FitConfig& config, int start_index, const ProgressFn& progress = {});

/// All starts, in start_index order. Runs on up to config.threads workers;
/// progress may then be called concurrently but never simultaneously.
std::vector<FitResult> run_starts(const Dataset& data, const FitConfig& config, const ProgressFn& progress = {});

/// Best non-discarded start by final objective, ties to the lowest index.
/// Throws FitError when every start is discarded.
FitResult fit(const Dataset& data, const FitConfig& config, const ProgressFn& progress = {});

}  // namespace rjm::em
