#pragma once

#include "rjm/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rjm {

struct Allocation {
  Vector probs;
  int hard = 1;  // 1-based
};

/// Posterior group probabilities of a new feature vector from the feature
/// model alone: pi_k proportional to tau_k N_p(x | mu_k, Sigma_k). The tau_k
/// need not be normalised.
Allocation allocate(const Vector& x_star, const std::vector<ClusterParams>& params);

/// alpha + x'beta of the allocated group.
double predict_y(const Vector& x_star, const std::vector<ClusterParams>& params);

struct LossRow {
  int k = 0;
  int group = 0;  // 1-based
  int n_test = 0;
  double mse = 0.0;
  double mean_mse = 0.0;
};

struct Selection {
  int best_k = 0;
  std::vector<LossRow> losses;
  /// Candidates dropped because their fit failed or left every test group
  /// empty.
  std::vector<std::string> warnings;
};

/// Fits each candidate on train, hard-allocates test rows, and scores the
/// mean over non-empty groups of the per-group squared prediction error.
/// Throws DomainError when no candidate survives.
Selection select_k(const Dataset& train, const Dataset& test, const std::vector<int>& candidate_ks,
                   const FitConfig& config);

/// Random split with ceil(frac * n) training rows.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double frac, std::uint64_t seed);

}  // namespace rjm
