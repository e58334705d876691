#pragma once

#include "rjm/random.hpp"
#include "rjm/types.hpp"

#include <vector>

namespace rjm::baselines {

struct KMeansResult {
  std::vector<int> labels;  // 0-based
  Matrix centers;           // k x p
  double inertia = 0.0;
};

/// Lloyd iterations from k-means++ seeds; the best of `restarts` runs by
/// within-cluster sum of squares.
KMeansResult kmeans(const Matrix& x, int k, int restarts, Rng& rng, int max_iter = 100);

struct GmmResult {
  std::vector<int> labels;  // 0-based
  Responsibilities resp;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Full-covariance Gaussian mixture fitted by plain EM, started from
/// k-means. `ridge` is added to every covariance diagonal to keep the
/// densities finite.
GmmResult gmm(const Matrix& x, int k, std::uint64_t seed, int max_iter = 200, double tol = 1e-8,
              double ridge = 1e-6);

/// Columns scaled to mean zero and unit standard deviation; a constant
/// column is only centred.
Matrix standardize(const Matrix& x);

}  // namespace rjm::baselines
