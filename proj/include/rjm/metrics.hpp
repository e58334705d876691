#pragma once

#include "rjm/types.hpp"

#include <vector>

namespace rjm::metrics {

/// Cross-tabulation of two labelings; rows index the distinct values of the
/// first in sorted order, columns those of the second.
struct ContingencyTable {
  Eigen::MatrixXi counts;

  static ContingencyTable from_labels(const std::vector<int>& a, const std::vector<int>& b);
  long long total() const { return counts.cast<long long>().sum(); }
};

/// Hubert-Arabie adjusted Rand index. When both partitions are trivial the
/// index is 1 for identical partitions and 0 otherwise.
double adjusted_rand(const std::vector<int>& labels_a, const std::vector<int>& labels_b);

/// Mann-Whitney AUC of |scores| separating true from false support; ties
/// count one half.
double selection_auc(const std::vector<bool>& true_support, const Vector& scores);

/// RMSE between beta_hat_j * sd_j and beta_true_j * sd_j.
double coef_rmse_standardized(const Vector& beta_hat, const Vector& beta_true, const Vector& x_sd);

/// Fraction of fits with |beta_j| > threshold, per coordinate.
Vector inclusion_frequencies(const std::vector<Vector>& fits, double threshold = 1e-8);

/// Permutation of fitted cluster labels (1-based) that maximises agreement
/// with the reference labels; result[k] is the reference label matched to
/// fitted label k + 1. Exhaustive over permutations, for small K.
std::vector<int> best_label_matching(const std::vector<int>& fitted, const std::vector<int>& reference, int k);

}  // namespace rjm::metrics
