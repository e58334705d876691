#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rjm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when an argument violates a mathematical precondition.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when an iterative solver exhausts its budget. Carries the last
/// iterate and its optimality residual so callers can decide what to do.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, Matrix last_iterate, double residual)
      : std::runtime_error(what), last_iterate_(std::move(last_iterate)), residual_(residual) {}

  const Matrix& last_iterate() const { return last_iterate_; }
  double residual() const { return residual_; }

 private:
  Matrix last_iterate_;
  double residual_;
};

/// Raised by the EM driver when no usable run survives.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Paired observations: n x p features and an n-vector of responses.
struct Dataset {
  Matrix x;
  Vector y;
  std::vector<std::string> feature_names;

  Dataset() = default;
  Dataset(Matrix x_, Vector y_, std::vector<std::string> names = {});

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }

  /// Throws DomainError on shape mismatch or non-finite entries.
  void validate() const;

  /// Rows selected by index, in the given order.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

/// One mixture component. Natural regression parameters are canonical;
/// the covariance is cached next to the precision and refreshed whenever
/// the precision is replaced through set_omega().
struct ClusterParams {
  double tau = 1.0;
  Vector mu;
  Matrix omega;
  Matrix sigma_x;
  double log_det_omega = 0.0;
  double alpha = 0.0;
  Vector beta;
  double sigma2 = 1.0;
  std::optional<double> lambda;

  /// Replaces omega (symmetrised), refreshing sigma_x and log_det_omega.
  /// Throws DomainError when the matrix is not positive definite.
  void set_omega(const Matrix& omega_new);

  Eigen::Index p() const { return mu.size(); }
};

struct ScaledRegression {
  double chi = 0.0;
  Vector phi;
  double rho = 1.0;
};

struct NaturalRegression {
  double alpha = 0.0;
  Vector beta;
  double sigma2 = 1.0;
};

ScaledRegression to_scaled(double alpha, const Vector& beta, double sigma2);
NaturalRegression from_scaled(const ScaledRegression& s);

/// Posterior membership probabilities m_ki (rows are samples) and their
/// column sums n_k.
struct Responsibilities {
  Matrix m;
  Vector n_k;

  Responsibilities() = default;
  explicit Responsibilities(Matrix m_);

  Eigen::Index n() const { return m.rows(); }
  Eigen::Index k() const { return m.cols(); }

  /// Column weights for cluster k.
  Vector weights(Eigen::Index k) const { return m.col(k); }

  /// 0-based argmax of each row; ties resolve to the lowest index.
  std::vector<int> hard_labels() const;
};

enum class Scheme { FLasso, RLasso, NJ };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

struct FitConfig {
  int k = 2;
  Scheme scheme = Scheme::NJ;
  double c = 0.25;
  /// Graphical-lasso penalty; empty means the universal threshold
  /// sqrt(2 n log p) / 2.
  std::optional<double> psi;
  int n_starts = 10;
  int max_iter = 20;
  double tol = 1e-6;
  double min_group_frac_divisor = 10.0;
  std::uint64_t seed = 1;
  int cv_folds = 5;
  int cv_grid_size = 50;
  /// Worker threads used across multi-starts.
  int threads = 1;

  void validate() const;
};

/// Per-iteration record handed to the progress callback.
struct IterationRecord {
  int start_index = 0;
  int iteration = 0;
  double objective = 0.0;
  Vector n_k;
  int label_changes = 0;
};

struct FitResult {
  Scheme scheme = Scheme::NJ;
  std::vector<ClusterParams> params;
  Responsibilities resp;
  /// 1-based cluster labels.
  std::vector<int> labels;
  std::vector<double> objective_trace;
  bool converged = false;
  bool discarded = false;
  int start_index = 0;
  /// Trace index at which the FLasso penalties were re-estimated.
  std::optional<int> refit_index;
  int iterations = 0;
  /// Reason a start was discarded, empty otherwise.
  std::string failure;

  Eigen::Index k() const { return static_cast<Eigen::Index>(params.size()); }
};

/// Invariant checks shared by tests and debug assertions. Each throws
/// DomainError with a description of the first violation found.
void check_params(const std::vector<ClusterParams>& params);
void check_responsibilities(const Responsibilities& r, double tol = 1e-12);

}  // namespace rjm
