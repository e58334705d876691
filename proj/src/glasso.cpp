#include "rjm/glasso.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace rjm::glasso {
namespace {

double soft(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Lasso for one column: min 0.5 b' W11 b - s12' b + rho |b|_1, where W11 is
// W with row/column j removed. b is indexed over the full 0..p-1 range with
// b(j) unused. wb holds W11 * b and is kept in sync.
void column_lasso(const Matrix& w, const Vector& s_col, Eigen::Index j, double rho, Vector& b, Vector& wb,
                  double inner_tol) {
  const Eigen::Index p = w.rows();
  for (int sweep = 0; sweep < 10000; ++sweep) {
    double max_delta = 0.0;
    for (Eigen::Index l = 0; l < p; ++l) {
      if (l == j) continue;
      const double wll = w(l, l);
      const double old = b(l);
      const double partial = s_col(l) - (wb(l) - wll * old);
      const double next = soft(partial, rho) / wll;
      const double delta = next - old;
      if (delta != 0.0) {
        for (Eigen::Index m = 0; m < p; ++m) {
          if (m != j) wb(m) += w(m, l) * delta;
        }
        b(l) = next;
        max_delta = std::max(max_delta, std::abs(delta) * std::sqrt(wll));
      }
    }
    if (max_delta <= inner_tol) return;
  }
}

// Builds the precision matrix from per-column regressions. An off-diagonal
// entry is zero whenever either of its two column estimates is exactly zero.
Matrix assemble_precision(const Matrix& w, const Matrix& coef) {
  const Eigen::Index p = w.rows();
  Vector diag(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double dot = 0.0;
    for (Eigen::Index l = 0; l < p; ++l) {
      if (l != j) dot += w(l, j) * coef(l, j);
    }
    diag(j) = 1.0 / (w(j, j) - dot);
  }
  Matrix omega = Matrix::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    omega(j, j) = diag(j);
    for (Eigen::Index i = j + 1; i < p; ++i) {
      const double from_j = coef(i, j);
      const double from_i = coef(j, i);
      if (from_j == 0.0 || from_i == 0.0) continue;
      const double v = 0.5 * (-from_j * diag(j) - from_i * diag(i));
      omega(i, j) = v;
      omega(j, i) = v;
    }
  }
  return omega;
}

}  // namespace

double kkt_residual(const Matrix& s, double rho, const Matrix& omega) {
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success) throw DomainError("kkt_residual: omega is singular or not positive definite");
  const Matrix w = llt.solve(Matrix::Identity(omega.rows(), omega.cols()));
  double worst = 0.0;
  for (Eigen::Index i = 0; i < omega.rows(); ++i) {
    for (Eigen::Index j = 0; j < omega.cols(); ++j) {
      const double g = w(i, j) - s(i, j);
      const double o = omega(i, j);
      double v;
      if (i == j) {
        v = std::abs(g - rho);
      } else if (o == 0.0) {
        v = std::max(0.0, std::abs(g) - rho);
      } else {
        v = std::abs(g - rho * (o > 0.0 ? 1.0 : -1.0));
      }
      worst = std::max(worst, v);
    }
  }
  return worst;
}

double objective(const Matrix& s, double rho, const Matrix& omega) {
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  double log_det = 0.0;
  const Matrix& l = llt.matrixL();
  for (Eigen::Index j = 0; j < l.rows(); ++j) log_det += 2.0 * std::log(l(j, j));
  return log_det - (omega.cwiseProduct(s)).sum() - rho * omega.cwiseAbs().sum();
}

Matrix solve(const GlassoProblem& prob) {
  const Matrix& s_in = prob.s;
  const Eigen::Index p = s_in.rows();
  if (p == 0 || s_in.cols() != p) throw DomainError("glasso: S must be a non-empty square matrix");
  if (!s_in.allFinite()) throw DomainError("glasso: S has non-finite entries");
  if ((s_in - s_in.transpose()).cwiseAbs().maxCoeff() > 1e-10) throw DomainError("glasso: S is not symmetric");
  if (!(prob.rho >= 0.0)) throw DomainError("glasso: rho must be non-negative");
  if (!(prob.tol > 0.0) || prob.max_sweeps < 1) throw DomainError("glasso: invalid tolerance or sweep budget");

  Matrix s = 0.5 * (s_in + s_in.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -1e-8) {
    std::ostringstream os;
    os << "glasso: S is not positive semi-definite (min eigenvalue " << min_eig << ")";
    throw DomainError(os.str());
  }
  const double mean_diag = s.trace() / static_cast<double>(p);
  if (min_eig <= 1e-12 * std::max(mean_diag, 1e-300)) {
    s.diagonal().array() += 1e-8 * std::max(mean_diag, 1e-12);
  }

  if (p == 1) {
    Matrix omega(1, 1);
    omega(0, 0) = 1.0 / (s(0, 0) + prob.rho);
    return omega;
  }

  double off_scale = 0.0;
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      if (i != j) off_scale += std::abs(s(i, j));
  off_scale /= static_cast<double>(p * (p - 1));
  if (off_scale < 1e-12 * mean_diag) off_scale = mean_diag;

  Matrix w = s;
  w.diagonal().array() += prob.rho;
  Matrix coef = Matrix::Zero(p, p);  // column j holds the regression for node j
  double change_tol = prob.tol * off_scale;
  double inner_tol = std::min(1e-10, prob.tol * 1e-4) * std::sqrt(mean_diag + prob.rho);
  Matrix omega;
  double residual = std::numeric_limits<double>::infinity();

  for (int sweep = 0; sweep < prob.max_sweeps; ++sweep) {
    const Matrix w_prev = w;
    for (Eigen::Index j = 0; j < p; ++j) {
      Vector b = coef.col(j);
      b(j) = 0.0;
      Vector wb = Vector::Zero(p);
      for (Eigen::Index l = 0; l < p; ++l) {
        if (l == j || b(l) == 0.0) continue;
        for (Eigen::Index m = 0; m < p; ++m)
          if (m != j) wb(m) += w(m, l) * b(l);
      }
      column_lasso(w, s.col(j), j, prob.rho, b, wb, inner_tol);
      coef.col(j) = b;
      for (Eigen::Index m = 0; m < p; ++m) {
        if (m == j) continue;
        w(m, j) = wb(m);
        w(j, m) = wb(m);
      }
    }
    double change = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j)
        if (i != j) change += std::abs(w(i, j) - w_prev(i, j));
    change /= static_cast<double>(p * (p - 1));
    if (change > change_tol) continue;

    omega = assemble_precision(w, coef);
    Eigen::LLT<Matrix> llt(omega);
    if (llt.info() == Eigen::Success) {
      residual = kkt_residual(s, prob.rho, omega);
      if (residual <= prob.tol) return omega;
    }
    change_tol *= 0.1;
    inner_tol = std::max(inner_tol * 0.1, 1e-15);
  }
  if (omega.size() == 0) omega = assemble_precision(w, coef);
  std::ostringstream os;
  os << "glasso: no convergence after " << prob.max_sweeps << " sweeps (KKT residual " << residual << ")";
  throw ConvergenceError(os.str(), omega, residual);
}

}  // namespace rjm::glasso
