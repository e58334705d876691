#include "rjm/types.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace rjm {

Dataset::Dataset(Matrix x_, Vector y_, std::vector<std::string> names)
    : x(std::move(x_)), y(std::move(y_)), feature_names(std::move(names)) {
  validate();
}

void Dataset::validate() const {
  if (x.rows() != y.size()) {
    std::ostringstream os;
    os << "dataset: X has " << x.rows() << " rows but y has length " << y.size();
    throw DomainError(os.str());
  }
  if (!feature_names.empty() && static_cast<Eigen::Index>(feature_names.size()) != x.cols()) {
    throw DomainError("dataset: feature_names length does not match column count");
  }
  if (!x.allFinite() || !y.allFinite()) throw DomainError("dataset: non-finite entry");
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = rows[r];
    if (i < 0 || i >= n()) throw DomainError("dataset: subset row out of range");
    out.x.row(static_cast<Eigen::Index>(r)) = x.row(i);
    out.y(static_cast<Eigen::Index>(r)) = y(i);
  }
  out.feature_names = feature_names;
  return out;
}

void ClusterParams::set_omega(const Matrix& omega_new) {
  Matrix sym = 0.5 * (omega_new + omega_new.transpose());
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() != Eigen::Success) throw DomainError("precision matrix is not positive definite");
  const Matrix& l = llt.matrixL();
  double ld = 0.0;
  for (Eigen::Index j = 0; j < l.rows(); ++j) ld += std::log(l(j, j));
  omega = std::move(sym);
  log_det_omega = 2.0 * ld;
  sigma_x = llt.solve(Matrix::Identity(omega.rows(), omega.cols()));
  sigma_x = 0.5 * (sigma_x + sigma_x.transpose()).eval();
}

ScaledRegression to_scaled(double alpha, const Vector& beta, double sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("to_scaled: sigma2 must be positive");
  const double sigma = std::sqrt(sigma2);
  return {alpha / sigma, beta / sigma, 1.0 / sigma};
}

NaturalRegression from_scaled(const ScaledRegression& s) {
  if (!(s.rho > 0.0)) throw DomainError("from_scaled: rho must be positive");
  return {s.chi / s.rho, s.phi / s.rho, 1.0 / (s.rho * s.rho)};
}

Responsibilities::Responsibilities(Matrix m_) : m(std::move(m_)), n_k(m.colwise().sum().transpose()) {}

std::vector<int> Responsibilities::hard_labels() const {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best = 0;
    m.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::FLasso: return "flasso";
    case Scheme::RLasso: return "rlasso";
    case Scheme::NJ: return "nj";
  }
  return "nj";
}

Scheme parse_scheme(const std::string& s) {
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "flasso") return Scheme::FLasso;
  if (lower == "rlasso") return Scheme::RLasso;
  if (lower == "nj") return Scheme::NJ;
  throw DomainError("unknown scheme '" + s + "' (expected nj, flasso or rlasso)");
}

void FitConfig::validate() const {
  if (k < 1) throw DomainError("config: k must be >= 1");
  if (n_starts < 1) throw DomainError("config: n_starts must be >= 1");
  if (max_iter < 1) throw DomainError("config: max_iter must be >= 1");
  if (!(tol > 0.0)) throw DomainError("config: tol must be positive");
  if (!(c > 0.0)) throw DomainError("config: c must be positive");
  if (psi && !(*psi >= 0.0)) throw DomainError("config: psi must be non-negative");
  if (!(min_group_frac_divisor > 0.0)) throw DomainError("config: min_group_frac_divisor must be positive");
  if (cv_folds < 2) throw DomainError("config: cv_folds must be >= 2");
  if (cv_grid_size < 2) throw DomainError("config: cv_grid_size must be >= 2");
  if (threads < 1) throw DomainError("config: threads must be >= 1");
}

void check_params(const std::vector<ClusterParams>& params) {
  if (params.empty()) throw DomainError("params: empty");
  double tau_sum = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& c = params[k];
    const std::string tag = "params[" + std::to_string(k) + "]: ";
    if (!(c.tau > 0.0 && c.tau <= 1.0)) throw DomainError(tag + "tau outside (0, 1]");
    tau_sum += c.tau;
    if (!(c.sigma2 > 0.0)) throw DomainError(tag + "sigma2 not positive");
    const Matrix asym = c.omega - c.omega.transpose();
    if (asym.cwiseAbs().maxCoeff() > 1e-10) throw DomainError(tag + "omega not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(c.omega, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0.0)) throw DomainError(tag + "omega not positive definite");
    const Matrix prod = c.sigma_x * c.omega - Matrix::Identity(c.omega.rows(), c.omega.cols());
    if (prod.cwiseAbs().maxCoeff() > 1e-8) throw DomainError(tag + "sigma_x is not the inverse of omega");
  }
  if (std::abs(tau_sum - 1.0) > 1e-12) throw DomainError("params: tau does not sum to one");
}

void check_responsibilities(const Responsibilities& r, double tol) {
  for (Eigen::Index i = 0; i < r.m.rows(); ++i) {
    const double s = r.m.row(i).sum();
    if (std::abs(s - 1.0) > tol) throw DomainError("responsibilities: row " + std::to_string(i) + " does not sum to one");
    if (r.m.row(i).minCoeff() < 0.0 || r.m.row(i).maxCoeff() > 1.0)
      throw DomainError("responsibilities: entry outside [0, 1] in row " + std::to_string(i));
  }
  const Vector cs = r.m.colwise().sum().transpose();
  if ((cs - r.n_k).cwiseAbs().maxCoeff() > 1e-10) throw DomainError("responsibilities: n_k out of sync");
  if (std::abs(r.n_k.sum() - static_cast<double>(r.m.rows())) > 1e-10 * std::max<double>(1.0, r.m.rows()))
    throw DomainError("responsibilities: n_k does not sum to n");
}

}  // namespace rjm
