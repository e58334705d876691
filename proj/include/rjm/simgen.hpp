#pragma once

#include "rjm/random.hpp"
#include "rjm/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rjm::sim {

enum class Scenario { AppendixA, Toy51, SemiSynth };
enum class Case { A, B, C };

std::string to_string(Scenario s);
std::string to_string(Case c);
Scenario parse_scenario(const std::string& s);
Case parse_case(const std::string& s);

struct SimSpec {
  Scenario scenario = Scenario::Toy51;
  Case regression_case = Case::A;
  bool correlated = false;
  std::vector<int> n_per_group{50, 50};
  int p = 10;
  double d = 1.0;
  double snr_target = 3.0;
  double sparsity = 0.04;
  std::uint64_t seed = 1;
  /// Per-group feature covariances; the semi-synthetic generator falls back
  /// to synthetic_covariances() when absent.
  std::optional<std::vector<Matrix>> base_covariances;

  void validate() const;
};

struct TruthGroup {
  Vector mu;
  Matrix sigma_x;
  double alpha = 0.0;
  Vector beta;
  double sigma2 = 1.0;
};

struct Truth {
  std::vector<TruthGroup> groups;
  /// Sign applied to the mean shift of group 2.
  double shift_sign = 1.0;
  bool synthetic_covariances = false;
  /// Achieved Var(m) / sigma_y^2 (semi-synthetic only).
  double snr = 0.0;

  /// True when every group has the same generating parameters.
  bool groups_identical() const;
};

struct SimData {
  Dataset data;
  std::vector<int> labels;  // 1-based, groups stored contiguously
  Truth truth;
};

/// Draw from N(mu, sigma2) restricted to (lower, upper) by inverting the CDF;
/// intervals in the upper tail invert the survival function instead.
double truncated_normal(double mu, double sigma2, double lower, double upper, Rng& rng);

/// Equal mixture of TN(mu, sigma2, -inf, a) and TN(mu, sigma2, b, inf).
double mixture_truncated_normal(double mu, double sigma2, double a, double b, Rng& rng);

/// Uniform-driven variants: the same draw for a given u in (0, 1), so a
/// coefficient can be rescaled through sigma2 without being redrawn.
double truncated_normal_quantile(double mu, double sigma2, double lower, double upper, double u);
double mixture_truncated_normal_quantile(double mu, double sigma2, double a, double b, double u);

/// Samples an n x p feature matrix for one group.
using FeatureSampler = std::function<Matrix(Eigen::Index n, Rng& rng)>;

/// Noise variance at which a lasso fitted with known labels (50 training
/// rows, 5-fold CV) predicts 250 test responses with correlation in
/// [0.78, 0.82], averaged over 5 inner replicates sharing random numbers
/// across bisection steps.
double calibrate_noise_51(const FeatureSampler& draw_x, const Vector& beta, double alpha, std::uint64_t seed);

/// Correlation reached by the calibration protocol at a given noise
/// variance.
double oracle_lasso_correlation(const FeatureSampler& draw_x, const Vector& beta, double alpha, double sigma2,
                                std::uint64_t seed, int replicates = 5);

SimData gen_toy51(const SimSpec& spec);

/// Two groups of 100 with p = 10, X_k ~ N(mu_k, 0.5 I), one shared active
/// predictor chosen at random, sigma2_k = Var(x* beta_k) / 5.
SimData gen_appendixA(double delta_mu, std::pair<double, double> beta_pair, std::uint64_t seed);

/// Sparse precision matrices on an Erdos-Renyi graph (edge probability
/// 0.05), made diagonally dominant, inverted and scaled to correlations.
std::vector<Matrix> synthetic_covariances(int k, int p, Rng& rng);

SimData gen_semisynth(const SimSpec& spec);

/// Dispatches on spec.scenario.
SimData generate(const SimSpec& spec);

}  // namespace rjm::sim
