#include "rjm/simgen.hpp"

#include "rjm/sparse_regression.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

namespace rjm::sim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.4142135623730950488;

// Upper tail probability of the standard normal.
double upper_tail(double z) {
  if (z == kInf) return 0.0;
  if (z == -kInf) return 1.0;
  return 0.5 * boost::math::erfc(z / kSqrt2);
}

// Inverse of upper_tail for q in (0, 1).
double upper_tail_inv(double q) { return kSqrt2 * boost::math::erfc_inv(2.0 * q); }

double open_uniform(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u;
  do {
    u = unif(rng);
  } while (u <= 0.0);
  return u;
}

Matrix standard_normal(Eigen::Index n, Eigen::Index p, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix out(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) out(i, j) = z(rng);
  return out;
}

double population_variance(const Vector& v) {
  return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size());
}

double correlation(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  const double den = std::sqrt(ac.squaredNorm() * bc.squaredNorm());
  return den > 0.0 ? ac.dot(bc) / den : 0.0;
}

SimData assemble(const std::vector<Matrix>& xs, const std::vector<Vector>& ys, Truth truth) {
  Eigen::Index n = 0;
  for (const auto& x : xs) n += x.rows();
  const Eigen::Index p = xs.front().cols();
  SimData out;
  out.data.x.resize(n, p);
  out.data.y.resize(n);
  Eigen::Index row = 0;
  for (std::size_t g = 0; g < xs.size(); ++g) {
    out.data.x.middleRows(row, xs[g].rows()) = xs[g];
    out.data.y.segment(row, ys[g].size()) = ys[g];
    row += xs[g].rows();
    out.labels.insert(out.labels.end(), static_cast<std::size_t>(xs[g].rows()), static_cast<int>(g) + 1);
  }
  for (Eigen::Index j = 0; j < p; ++j) out.data.feature_names.push_back("x" + std::to_string(j + 1));
  out.data.validate();
  out.truth = std::move(truth);
  return out;
}

double uniform_sign(Rng& rng) { return std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0; }

}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::AppendixA: return "appendixA";
    case Scenario::Toy51: return "toy51";
    case Scenario::SemiSynth: return "semisynth";
  }
  return "toy51";
}

std::string to_string(Case c) {
  switch (c) {
    case Case::A: return "A";
    case Case::B: return "B";
    case Case::C: return "C";
  }
  return "A";
}

Scenario parse_scenario(const std::string& s) {
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "appendixa") return Scenario::AppendixA;
  if (lower == "toy51") return Scenario::Toy51;
  if (lower == "semisynth") return Scenario::SemiSynth;
  throw DomainError("unknown scenario '" + s + "' (expected appendixA, toy51 or semisynth)");
}

Case parse_case(const std::string& s) {
  if (s == "A" || s == "a") return Case::A;
  if (s == "B" || s == "b") return Case::B;
  if (s == "C" || s == "c") return Case::C;
  throw DomainError("unknown case '" + s + "' (expected A, B or C)");
}

void SimSpec::validate() const {
  if (!(d >= 0.0) || !std::isfinite(d)) throw DomainError("simulation: d must be finite and non-negative");
  if (!(sparsity > 0.0 && sparsity < 1.0)) throw DomainError("simulation: sparsity must lie in (0, 1)");
  if (p < 1) throw DomainError("simulation: p must be >= 1");
  if (n_per_group.size() != 2) throw DomainError("simulation: exactly two groups are supported");
  for (int nk : n_per_group)
    if (nk < 2) throw DomainError("simulation: each group needs at least two samples");
  if (!(snr_target > 0.0)) throw DomainError("simulation: snr target must be positive");
  if (base_covariances) {
    if (base_covariances->size() != n_per_group.size())
      throw DomainError("simulation: need one base covariance per group");
    for (const auto& c : *base_covariances)
      if (c.rows() != p || c.cols() != p) throw DomainError("simulation: base covariance has wrong dimension");
  }
}

bool Truth::groups_identical() const {
  for (std::size_t g = 1; g < groups.size(); ++g) {
    const auto& a = groups.front();
    const auto& b = groups[g];
    if (a.mu != b.mu || a.sigma_x != b.sigma_x || a.alpha != b.alpha || a.beta != b.beta || a.sigma2 != b.sigma2)
      return false;
  }
  return true;
}

double truncated_normal_quantile(double mu, double sigma2, double lower, double upper, double u) {
  if (!(sigma2 > 0.0)) throw DomainError("truncated_normal: sigma2 must be positive");
  if (!(lower < upper)) throw DomainError("truncated_normal: lower must be below upper");
  const double sd = std::sqrt(sigma2);
  double a = (lower - mu) / sd;
  double b = (upper - mu) / sd;
  // Work in the upper tail, mirroring intervals that lie below zero.
  // Mirroring reverses the order, so u is reflected too to keep the
  // quantile map increasing.
  const bool mirrored = a + b < 0.0;
  if (mirrored) {
    std::swap(a, b);
    a = -a;
    b = -b;
    u = 1.0 - u;
  }
  const double qa = upper_tail(a);
  const double qb = upper_tail(b);
  const double mass = qa - qb;
  if (!(mass >= 1e-300)) throw DomainError("truncated_normal: interval has negligible probability mass");
  double z;
  if (a > 0.0) {
    const double q = qa - u * mass;
    z = upper_tail_inv(std::clamp(q, std::numeric_limits<double>::min(), 1.0));
  } else {
    // The interval straddles zero; the lower CDF is accurate there.
    const double pa = 1.0 - qa;
    const double prob = pa + u * mass;
    z = -upper_tail_inv(std::clamp(prob, std::numeric_limits<double>::min(), 1.0));
  }
  z = std::clamp(z, a, b);
  if (mirrored) z = -z;
  return mu + sd * z;
}

double truncated_normal(double mu, double sigma2, double lower, double upper, Rng& rng) {
  return truncated_normal_quantile(mu, sigma2, lower, upper, open_uniform(rng));
}

double mixture_truncated_normal_quantile(double mu, double sigma2, double a, double b, double u) {
  if (!(a < b)) throw DomainError("mixture_truncated_normal: a must be below b");
  if (u < 0.5) return truncated_normal_quantile(mu, sigma2, -kInf, a, 2.0 * u);
  return truncated_normal_quantile(mu, sigma2, b, kInf, 2.0 * u - 1.0);
}

double mixture_truncated_normal(double mu, double sigma2, double a, double b, Rng& rng) {
  return mixture_truncated_normal_quantile(mu, sigma2, a, b, open_uniform(rng));
}

double oracle_lasso_correlation(const FeatureSampler& draw_x, const Vector& beta, double alpha, double sigma2,
                                std::uint64_t seed, int replicates) {
  double total = 0.0;
  const double sd = std::sqrt(sigma2);
  for (int r = 0; r < replicates; ++r) {
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(r)});
    const Matrix x_train = draw_x(50, rng);
    const Matrix x_test = draw_x(250, rng);
    const Matrix z = standard_normal(300, 1, rng);
    const Vector y_train = (x_train * beta).array() + alpha + sd * z.col(0).head(50).array();
    const Vector y_test = (x_test * beta).array() + alpha + sd * z.col(0).tail(250).array();
    const auto cv = regression::cv_lasso(x_train, y_train, 5, 50, derive_seed(seed, {0xcc, static_cast<std::uint64_t>(r)}));
    const Vector pred = (x_test * cv.fit.beta).array() + cv.fit.intercept;
    total += correlation(pred, y_test);
  }
  return total / replicates;
}

double calibrate_noise_51(const FeatureSampler& draw_x, const Vector& beta, double alpha, std::uint64_t seed) {
  if (beta.cwiseAbs().maxCoeff() == 0.0) throw DomainError("calibrate_noise_51: beta is zero, nothing to calibrate");
  Rng rng = make_rng(seed, {0x5e});
  const Vector signal = draw_x(5000, rng) * beta;
  const double var_signal = population_variance(signal);
  if (!(var_signal > 0.0)) throw DomainError("calibrate_noise_51: signal has zero variance");

  constexpr double kLow = 0.78;
  constexpr double kHigh = 0.82;
  double lo = std::log(1e-6 * var_signal);
  double hi = std::log(1e3 * var_signal);
  auto corr_at = [&](double log_s2) { return oracle_lasso_correlation(draw_x, beta, alpha, std::exp(log_s2), seed); };
  if (corr_at(lo) < kLow || corr_at(hi) > kHigh)
    throw DomainError("calibrate_noise_51: target correlation is not bracketed by the variance range");
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double c = corr_at(mid);
    if (c >= kLow && c <= kHigh) return std::exp(mid);
    // Correlation falls as the noise grows.
    if (c > kHigh) lo = mid;
    else hi = mid;
  }
  throw DomainError("calibrate_noise_51: bisection did not reach the target correlation");
}

SimData gen_toy51(const SimSpec& spec) {
  spec.validate();
  if (spec.scenario != Scenario::Toy51) throw DomainError("gen_toy51: spec is not a toy51 scenario");
  if (spec.p < 7) throw DomainError("gen_toy51: need p >= 7");
  const Eigen::Index p = spec.p;

  Rng rng = make_rng(spec.seed, {0x51});
  Truth truth;
  truth.shift_sign = uniform_sign(rng);

  const double alphas[3][2] = {{0.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}};
  const double slopes[3][2] = {{1.0, -1.0}, {1.0, 1.0}, {1.0, 1.0}};
  const auto ci = static_cast<int>(spec.regression_case);

  std::vector<Matrix> xs;
  std::vector<Vector> ys;
  for (int g = 0; g < 2; ++g) {
    TruthGroup tg;
    tg.mu = Vector::Constant(p, g == 0 ? 0.0 : spec.d * truth.shift_sign);
    tg.alpha = alphas[ci][g];
    tg.beta = Vector::Zero(p);
    tg.beta(0) = slopes[ci][g];
    tg.sigma_x = Matrix::Identity(p, p);
    if (spec.correlated) {
      // x1 = 1.5 x3 + 0.5 x5 - 0.7 x7 + e, Var(e) = 0.5.
      Vector a = Vector::Zero(p);
      a(2) = 1.5;
      a(4) = 0.5;
      a(6) = -0.7;
      tg.sigma_x(0, 0) = a.squaredNorm() + 0.5;
      for (Eigen::Index j = 1; j < p; ++j) tg.sigma_x(0, j) = tg.sigma_x(j, 0) = a(j);
      tg.mu(0) = a.sum() * tg.mu(1);
    }
    const Vector mu = tg.mu;
    const bool correlated = spec.correlated;
    FeatureSampler sampler = [mu, correlated, p](Eigen::Index n, Rng& r) {
      Matrix x = standard_normal(n, p, r);
      x.rowwise() += mu.transpose();
      if (correlated) {
        std::normal_distribution<double> e(0.0, std::sqrt(0.5));
        for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = 1.5 * x(i, 2) + 0.5 * x(i, 4) - 0.7 * x(i, 6) + e(r);
      }
      return x;
    };
    // Shared calibration seed: identical groups get identical noise levels.
    tg.sigma2 = calibrate_noise_51(sampler, tg.beta, tg.alpha, derive_seed(spec.seed, {0xca1}));
    Rng data_rng = make_rng(spec.seed, {0xda7a, static_cast<std::uint64_t>(g)});
    Matrix x = sampler(spec.n_per_group[static_cast<std::size_t>(g)], data_rng);
    const Matrix z = standard_normal(x.rows(), 1, data_rng);
    Vector y = (x * tg.beta).array() + tg.alpha + std::sqrt(tg.sigma2) * z.col(0).array();
    xs.push_back(std::move(x));
    ys.push_back(std::move(y));
    truth.groups.push_back(std::move(tg));
  }
  return assemble(xs, ys, std::move(truth));
}

SimData gen_appendixA(double delta_mu, std::pair<double, double> beta_pair, std::uint64_t seed) {
  if (!std::isfinite(delta_mu)) throw DomainError("gen_appendixA: delta_mu must be finite");
  constexpr Eigen::Index p = 10;
  constexpr Eigen::Index nk = 100;
  Rng rng = make_rng(seed, {0xa});
  const auto active = std::uniform_int_distribution<Eigen::Index>(0, p - 1)(rng);
  const double betas[2] = {beta_pair.first, beta_pair.second};

  Truth truth;
  std::vector<Matrix> xs;
  std::vector<Vector> ys;
  for (int g = 0; g < 2; ++g) {
    TruthGroup tg;
    tg.mu = Vector::Constant(p, g == 0 ? 0.0 : delta_mu);
    tg.sigma_x = 0.5 * Matrix::Identity(p, p);
    tg.beta = Vector::Zero(p);
    tg.beta(active) = betas[g];
    Matrix x = std::sqrt(0.5) * standard_normal(nk, p, rng);
    x.rowwise() += tg.mu.transpose();
    const Vector signal = x * tg.beta;
    tg.sigma2 = population_variance(signal) / 5.0;
    if (!(tg.sigma2 > 0.0)) tg.sigma2 = 0.1;
    const Matrix z = standard_normal(nk, 1, rng);
    Vector y = signal.array() + std::sqrt(tg.sigma2) * z.col(0).array();
    xs.push_back(std::move(x));
    ys.push_back(std::move(y));
    truth.groups.push_back(std::move(tg));
  }
  return assemble(xs, ys, std::move(truth));
}

std::vector<Matrix> synthetic_covariances(int k, int p, Rng& rng) {
  std::vector<Matrix> out;
  std::bernoulli_distribution edge(0.05);
  std::uniform_real_distribution<double> magnitude(0.3, 0.7);
  for (int g = 0; g < k; ++g) {
    Matrix omega = Matrix::Zero(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j)
        if (edge(rng)) omega(i, j) = omega(j, i) = uniform_sign(rng) * magnitude(rng);
    for (int i = 0; i < p; ++i) omega(i, i) = omega.row(i).cwiseAbs().sum() + 0.5;
    Matrix sigma = omega.llt().solve(Matrix::Identity(p, p));
    const Vector sd = sigma.diagonal().cwiseSqrt();
    sigma = sd.cwiseInverse().asDiagonal() * sigma * sd.cwiseInverse().asDiagonal();
    out.push_back(0.5 * (sigma + sigma.transpose()));
  }
  return out;
}

SimData gen_semisynth(const SimSpec& spec) {
  spec.validate();
  if (spec.scenario != Scenario::SemiSynth) throw DomainError("gen_semisynth: spec is not a semisynth scenario");
  const int p = spec.p;
  const int active = static_cast<int>(std::lround(spec.sparsity * p));
  if (active < 2) throw DomainError("gen_semisynth: sparsity * p must be at least 2");
  const int n_common = active / 2;
  const int n_disjoint = active - n_common;
  if (n_common + 2 * n_disjoint > p) throw DomainError("gen_semisynth: too many active coefficients for p");

  Rng rng = make_rng(spec.seed, {0x5e5});
  Truth truth;
  std::vector<Matrix> covs;
  if (spec.base_covariances) {
    covs = *spec.base_covariances;
  } else {
    Rng cov_rng = make_rng(spec.seed, {0xc0f});
    covs = synthetic_covariances(2, p, cov_rng);
    truth.synthetic_covariances = true;
  }
  truth.shift_sign = uniform_sign(rng);

  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::vector<int> common(order.begin(), order.begin() + n_common);
  const std::vector<int> disjoint1(order.begin() + n_common, order.begin() + n_common + n_disjoint);
  const std::vector<int> disjoint2(order.begin() + n_common + n_disjoint, order.begin() + n_common + 2 * n_disjoint);

  // One uniform per coefficient; the scale is tuned through the quantile
  // transform so every magnitude stays outside (-0.1, 0.1).
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw_u = [&] {
    double u;
    do {
      u = unif(rng);
    } while (u <= 0.0);
    return u;
  };
  std::vector<double> u_common1, u_common2, u_dis1, u_dis2;
  for (int i = 0; i < n_common; ++i) u_common1.push_back(draw_u());
  for (int i = 0; i < n_common; ++i) u_common2.push_back(draw_u());
  for (int i = 0; i < n_disjoint; ++i) u_dis1.push_back(draw_u());
  for (int i = 0; i < n_disjoint; ++i) u_dis2.push_back(draw_u());

  const bool case_a = spec.regression_case == Case::A;
  auto betas_at = [&](double s2) {
    std::pair<Vector, Vector> b{Vector::Zero(p), Vector::Zero(p)};
    for (int i = 0; i < n_common; ++i) {
      const int j = common[static_cast<std::size_t>(i)];
      if (case_a) {
        b.first(j) = truncated_normal_quantile(0.0, s2, -kInf, -0.1, u_common1[static_cast<std::size_t>(i)]);
        b.second(j) = truncated_normal_quantile(0.0, s2, 0.1, kInf, u_common2[static_cast<std::size_t>(i)]);
      } else {
        b.first(j) = b.second(j) = mixture_truncated_normal_quantile(0.0, s2, -0.1, 0.1, u_common1[static_cast<std::size_t>(i)]);
      }
    }
    for (int i = 0; i < n_disjoint; ++i) {
      b.first(disjoint1[static_cast<std::size_t>(i)]) =
          mixture_truncated_normal_quantile(0.0, s2, -0.1, 0.1, u_dis1[static_cast<std::size_t>(i)]);
      b.second(disjoint2[static_cast<std::size_t>(i)]) =
          mixture_truncated_normal_quantile(0.0, s2, -0.1, 0.1, u_dis2[static_cast<std::size_t>(i)]);
    }
    return b;
  };

  std::vector<Matrix> xs;
  for (int g = 0; g < 2; ++g) {
    TruthGroup tg;
    tg.mu = Vector::Constant(p, g == 0 ? 0.0 : spec.d * truth.shift_sign);
    tg.sigma_x = covs[static_cast<std::size_t>(g)];
    tg.alpha = spec.regression_case == Case::B && g == 1 ? 1.0 : 0.0;
    tg.sigma2 = 1.0;
    Eigen::LLT<Matrix> llt(tg.sigma_x);
    if (llt.info() != Eigen::Success) throw DomainError("gen_semisynth: base covariance is not positive definite");
    Matrix x = standard_normal(spec.n_per_group[static_cast<std::size_t>(g)], p, rng) *
               llt.matrixL().transpose();
    x.rowwise() += tg.mu.transpose();
    xs.push_back(std::move(x));
    truth.groups.push_back(std::move(tg));
  }

  auto snr_at = [&](double log_s2) {
    const auto b = betas_at(std::exp(log_s2));
    Vector m(xs[0].rows() + xs[1].rows());
    m.head(xs[0].rows()) = (xs[0] * b.first).array() + truth.groups[0].alpha;
    m.tail(xs[1].rows()) = (xs[1] * b.second).array() + truth.groups[1].alpha;
    return population_variance(m);
  };
  // Below 1e-5 the truncation points sit so far in the tail that their
  // probability mass underflows.
  double lo = std::log(1e-5);
  double hi = std::log(1e4);
  const double target = spec.snr_target;
  if (snr_at(lo) > target * 1.0333 || snr_at(hi) < target * 0.9667)
    throw DomainError("gen_semisynth: cannot reach the requested signal-to-noise ratio");
  double log_s2 = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    log_s2 = 0.5 * (lo + hi);
    const double snr = snr_at(log_s2);
    if (std::abs(snr - target) <= 1e-6 * target) break;
    if (snr < target) lo = log_s2;
    else hi = log_s2;
  }
  const auto b = betas_at(std::exp(log_s2));
  truth.groups[0].beta = b.first;
  truth.groups[1].beta = b.second;
  truth.snr = snr_at(log_s2);
  if (std::abs(truth.snr - target) > 0.0333 * target)
    throw DomainError("gen_semisynth: signal-to-noise calibration did not converge");

  std::vector<Vector> ys;
  for (int g = 0; g < 2; ++g) {
    const auto& tg = truth.groups[static_cast<std::size_t>(g)];
    const Matrix z = standard_normal(xs[static_cast<std::size_t>(g)].rows(), 1, rng);
    ys.push_back((xs[static_cast<std::size_t>(g)] * tg.beta).array() + tg.alpha + z.col(0).array());
  }
  return assemble(xs, ys, std::move(truth));
}

SimData generate(const SimSpec& spec) {
  switch (spec.scenario) {
    case Scenario::Toy51: return gen_toy51(spec);
    case Scenario::SemiSynth: return gen_semisynth(spec);
    case Scenario::AppendixA: {
      // Cases A, B and C select the slope pairs (0.5, 0.5), (0.5, 1), (0.5, 1.5).
      const double second[3] = {0.5, 1.0, 1.5};
      return gen_appendixA(spec.d, {0.5, second[static_cast<int>(spec.regression_case)]}, spec.seed);
    }
  }
  throw DomainError("generate: unknown scenario");
}

}  // namespace rjm::sim
