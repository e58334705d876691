#pragma once

#include "rjm/types.hpp"

namespace rjm::glasso {

/// Penalized Gaussian likelihood for a precision matrix:
///   maximize log|Omega| - tr(Omega S) - rho * sum_ij |omega_ij|
/// The l1 norm runs over every entry, diagonal included.
struct GlassoProblem {
  Matrix s;
  double rho = 0.0;
  int max_sweeps = 200;
  double tol = 1e-5;
};

/// Block coordinate descent over columns of the covariance estimate W,
/// each column solved as a lasso by coordinate descent. Returns a symmetric
/// positive-definite precision matrix whose kkt_residual() is at most tol.
///
/// Throws DomainError for a malformed or non-PSD input and ConvergenceError
/// (holding the last iterate) when max_sweeps is exhausted.
Matrix solve(const GlassoProblem& prob);

/// Largest violation of the stationarity condition W - S - rho * Gamma = 0,
/// W = inverse(omega), Gamma a subgradient of the elementwise l1 norm.
double kkt_residual(const Matrix& s, double rho, const Matrix& omega);

/// The penalized objective at omega; -inf when omega is not PD.
double objective(const Matrix& s, double rho, const Matrix& omega);

}  // namespace rjm::glasso
