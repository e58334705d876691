#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "rjm/em.hpp"
#include "rjm/metrics.hpp"
#include "rjm/simgen.hpp"

using namespace rjm;

namespace {

sim::SimData toy(std::uint64_t seed, double d = 1.0) {
  sim::SimSpec spec;
  spec.seed = seed;
  spec.d = d;
  return sim::generate(spec);
}

ClusterParams unit_cluster(Eigen::Index p, double tau) {
  ClusterParams c;
  c.tau = tau;
  c.mu = Vector::Zero(p);
  c.beta = Vector::Zero(p);
  c.set_omega(Matrix::Identity(p, p));
  return c;
}

FitConfig config(Scheme s, std::uint64_t seed, int k = 2) {
  FitConfig cfg;
  cfg.k = k;
  cfg.scheme = s;
  cfg.seed = seed;
  cfg.n_starts = 3;
  return cfg;
}

Dataset permute(const Dataset& d, const std::vector<Eigen::Index>& perm) { return d.subset(perm); }

Matrix permute_rows(const Matrix& m, const std::vector<Eigen::Index>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < perm.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(perm[r]);
  return out;
}

double max_param_diff(const ClusterParams& a, const ClusterParams& b) {
  double d = std::abs(a.tau - b.tau);
  d = std::max(d, (a.mu - b.mu).cwiseAbs().maxCoeff());
  d = std::max(d, (a.omega - b.omega).cwiseAbs().maxCoeff());
  d = std::max(d, std::abs(a.alpha - b.alpha));
  d = std::max(d, (a.beta - b.beta).cwiseAbs().maxCoeff());
  d = std::max(d, std::abs(a.sigma2 - b.sigma2));
  return d;
}

}  // namespace

TEST_CASE("universal penalty") {
  CHECK(em::universal_psi(100, 10) == doctest::Approx(std::sqrt(200.0 * std::log(10.0)) / 2.0));
  FitConfig cfg;
  cfg.psi = 3.0;
  CHECK(em::resolve_psi(cfg, 100, 10) == 3.0);
}

TEST_CASE("E-step examples") {
  const auto sim = toy(1);
  SUBCASE("single component") {
    const auto r = em::e_step(sim.data, {unit_cluster(10, 1.0)});
    CHECK(r.m.isOnes(0.0));
  }
  SUBCASE("identical components return the prior") {
    auto a = unit_cluster(10, 0.3), b = unit_cluster(10, 0.7);
    const auto r = em::e_step(sim.data, {a, b});
    CHECK((r.m.col(0).array() - 0.3).abs().maxCoeff() < 1e-14);
    CHECK((r.m.col(1).array() - 0.7).abs().maxCoeff() < 1e-14);
  }
  SUBCASE("well separated one-dimensional components") {
    auto a = unit_cluster(1, 0.5), b = unit_cluster(1, 0.5);
    b.mu(0) = 10.0;
    Matrix x(1, 1);
    x << 0.0;
    Vector y(1);
    y << 0.0;
    const auto r = em::e_step(Dataset(x, y), {a, b});
    // Density ratio N(0|10,1)/N(0|0,1) = exp(-50).
    CHECK(r.m(0, 0) > 1.0 - 1e-10);
    CHECK(r.m(0, 1) == doctest::Approx(std::exp(-50.0) / (1.0 + std::exp(-50.0))).epsilon(1e-10));
  }
  SUBCASE("log-likelihood equals the mixture density") {
    auto a = unit_cluster(10, 0.4), b = unit_cluster(10, 0.6);
    b.mu.setConstant(0.5);
    b.alpha = 1.0;
    const auto es = em::e_step_full(sim.data, {a, b});
    double ll = 0.0;
    for (Eigen::Index i = 0; i < sim.data.n(); ++i) {
      double dens = 0.0;
      for (const auto* c : {&a, &b}) {
        const Vector d = sim.data.x.row(i).transpose() - c->mu;
        const double r = sim.data.y(i) - c->alpha;
        dens += c->tau * std::exp(-0.5 * d.squaredNorm() - 0.5 * r * r) / std::pow(2 * M_PI, 5.5);
      }
      ll += std::log(dens);
    }
    CHECK(es.loglik == doctest::Approx(ll).epsilon(1e-12));
  }
}

TEST_CASE("M-step for X") {
  const auto sim = toy(2);
  SUBCASE("one group gives column means") {
    std::vector<ClusterParams> ps{unit_cluster(10, 1.0)};
    const Responsibilities r(Matrix::Ones(sim.data.n(), 1));
    em::m_step_x(sim.data, r, 3.0, ps);
    CHECK((ps[0].mu - sim.data.x.colwise().mean().transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("one dimension is the closed form") {
    const Matrix x = sim.data.x.col(0);
    const Dataset d(x, sim.data.y);
    std::vector<ClusterParams> ps{unit_cluster(1, 1.0)};
    const double n = static_cast<double>(d.n());
    const double psi = em::universal_psi(d.n(), 2);
    em::m_step_x(d, Responsibilities(Matrix::Ones(d.n(), 1)), psi, ps);
    const double s = (x.array() - x.mean()).square().sum() / n;
    CHECK(ps[0].omega(0, 0) == doctest::Approx(1.0 / (s + psi / n)).epsilon(1e-10));
  }
  SUBCASE("weighted covariance against direct summation") {
    Rng rng = make_rng(3);
    const Vector w = oracle::random_weights(rng, sim.data.n());
    const Vector mu = oracle::random_vector(rng, 10);
    Matrix ref = Matrix::Zero(10, 10);
    for (Eigen::Index i = 0; i < sim.data.n(); ++i) {
      const Vector d = sim.data.x.row(i).transpose() - mu;
      ref += w(i) * d * d.transpose();
    }
    ref /= w.sum();
    CHECK((em::weighted_covariance(sim.data.x, w, mu) - ref).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("M-step for y") {
  const auto sim = toy(4);
  const auto& data = sim.data;
  const Eigen::Index n = data.n();
  SUBCASE("one NJ group matches a direct single-group update") {
    auto cfg = config(Scheme::NJ, 1, 1);
    auto state = em::initialize(data, cfg, 0);
    const auto before = state.params[0];
    const auto st = state.nj[0];
    em::m_step_y(data, state.resp, cfg, state);

    const Vector r0 = (data.y - data.x * before.beta).array() - before.alpha;
    const double s2 = r0.squaredNorm() / (static_cast<double>(n) + 2.0);
    const double alpha = (data.y - data.x * before.beta).mean();
    const Vector u = st.u_diag;
    const Matrix uh = u.cwiseSqrt().asDiagonal();
    const Matrix a = s2 * Matrix::Identity(10, 10) + uh * data.x.transpose() * data.x * uh;
    const Vector beta = uh * a.ldlt().solve(uh * data.x.transpose() * (data.y.array() - alpha).matrix());
    CHECK(state.params[0].sigma2 == doctest::Approx(s2).epsilon(1e-12));
    CHECK(state.params[0].alpha == doctest::Approx(alpha).epsilon(1e-12));
    for (Eigen::Index j = 0; j < 10; ++j) {
      const double expect = beta(j) * beta(j) < regression::kNJZeroThreshold ? 0.0 : beta(j);
      CHECK(std::abs(state.params[0].beta(j) - expect) < 1e-10);
    }
  }
  SUBCASE("fixed FLasso penalties stay put") {
    auto cfg = config(Scheme::FLasso, 1);
    auto state = em::initialize(data, cfg, 0);
    state.phase = em::FLassoPhase::Fixed;
    const auto l0 = *state.params[0].lambda, l1 = *state.params[1].lambda;
    em::m_step_y(data, state.resp, cfg, state);
    CHECK(*state.params[0].lambda == l0);
    CHECK(*state.params[1].lambda == l1);
  }
  SUBCASE("lasso update order uses the previous coefficients") {
    auto cfg = config(Scheme::RLasso, 5);
    auto state = em::initialize(data, cfg, 0);
    const auto before = state.params;
    em::m_step_y(data, state.resp, cfg, state);
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& c = before[k];
      const Vector w = state.resp.weights(static_cast<Eigen::Index>(k));
      const double nk = w.sum();
      const double lambda = 0.25 * std::sqrt(c.sigma2) * std::sqrt(2.0 * std::log(10.0) / nk) / c.beta.lpNorm<1>();
      const double sigma = std::sqrt(c.sigma2);
      const Vector phi_old = c.beta / sigma;
      const double chi_old = c.alpha / sigma;
      // rho from stale chi and phi.
      const Vector fitted = (data.x * phi_old).array() + chi_old;
      const double qa = w.dot(data.y.cwiseAbs2()), qb = w.dot(data.y.cwiseProduct(fitted)), qc = nk + 12.0;
      const double rho = (qb + std::sqrt(qb * qb + 4 * qa * qc)) / (2 * qa);
      const double chi = w.dot(rho * data.y - data.x * phi_old) / nk;
      regression::WeightedLassoProblem prob{data.x, data.y, w, chi, rho, lambda, 1e-12, 100000};
      const Vector phi = regression::weighted_lasso_cd(prob);
      const auto& got = state.params[k];
      CHECK(*got.lambda == doctest::Approx(lambda).epsilon(1e-12));
      CHECK(got.sigma2 == doctest::Approx(1.0 / (rho * rho)).epsilon(1e-12));
      CHECK(got.alpha == doctest::Approx(chi / rho).epsilon(1e-10));
      CHECK((got.beta - phi / rho).cwiseAbs().maxCoeff() < 1e-6);

      // Updating chi before rho gives a different answer on this example.
      const double chi_first = w.dot((1.0 / sigma) * data.y - data.x * phi_old) / nk;
      const Vector fitted2 = (data.x * phi_old).array() + chi_first;
      const double qb2 = w.dot(data.y.cwiseProduct(fitted2));
      const double rho2 = (qb2 + std::sqrt(qb2 * qb2 + 4 * qa * qc)) / (2 * qa);
      CHECK(std::abs(rho2 - rho) > 1e-8);
    }
  }
}

TEST_CASE("objective pieces") {
  const auto sim = toy(6);
  const auto& data = sim.data;
  Matrix m = Matrix::Zero(100, 2);
  m.topRows(50).col(0).setOnes();
  m.bottomRows(50).col(1).setOnes();
  const Responsibilities r(m);
  std::vector<ClusterParams> ps{unit_cluster(10, 0.5), unit_cluster(10, 0.5)};
  ps[0].beta(0) = 1.0;
  ps[1].beta(0) = -1.0;
  const auto parts = em::objective_parts(data, ps, r, Scheme::NJ, 2.0, 0.25);
  CHECK(parts.z == doctest::Approx(100.0 * std::log(0.5)).epsilon(1e-14));
  CHECK(parts.total() == doctest::Approx(em::objective(data, ps, r, Scheme::NJ, 2.0, 0.25)).epsilon(1e-14));
  for (auto s : {Scheme::FLasso, Scheme::RLasso}) {
    ps[0].lambda = 3.0;
    ps[1].lambda = 2.0;
    const auto q = em::objective_parts(data, ps, r, s, 2.0, 0.25);
    CHECK(std::abs(q.y + q.x + q.z - em::objective(data, ps, r, s, 2.0, 0.25)) < 1e-10);
  }
}

TEST_CASE("expected complete-data objective rises across every NJ M-step") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto sim = toy(100 + seed);
    const auto cfg = config(Scheme::NJ, seed);
    auto state = em::initialize(sim.data, cfg, 0);
    for (int it = 0; it < 20; ++it) {
      const auto nj_old = state.nj;
      const double q0 = em::objective(sim.data, state.params, state.resp, Scheme::NJ, state.psi, cfg.c, &nj_old);
      em::m_step_x(sim.data, state.resp, state.psi, state.params);
      const double qx = em::objective(sim.data, state.params, state.resp, Scheme::NJ, state.psi, cfg.c, &nj_old);
      em::m_step_y(sim.data, state.resp, cfg, state);
      const double q1 = em::objective(sim.data, state.params, state.resp, Scheme::NJ, state.psi, cfg.c, &nj_old);
      CHECK(qx >= q0 - 1e-8 * std::abs(q0));
      CHECK(q1 >= qx - 1e-8 * std::abs(qx));
      state.resp = em::e_step(sim.data, state.params);
    }
  }
}

TEST_CASE("initialization") {
  const auto sim = toy(7);
  const auto cfg = config(Scheme::NJ, 3);
  const auto a = em::initialize(sim.data, cfg, 0);
  const auto b = em::initialize(sim.data, cfg, 0);
  const auto c = em::initialize(sim.data, cfg, 1);
  CHECK(a.params[0].mu == b.params[0].mu);
  CHECK(a.params[1].beta == b.params[1].beta);
  CHECK((a.params[0].mu - c.params[0].mu).norm() > 0.0);
  CHECK_NOTHROW(check_params(a.params));

  Rng rng = make_rng(8);
  Matrix x = oracle::random_matrix(rng, 80, 3);
  x.bottomRows(40).array() += 10.0;
  const Vector y = oracle::random_vector(rng, 80);
  std::vector<int> truth(80, 1);
  std::fill(truth.begin() + 40, truth.end(), 2);
  const auto blobs = em::initialize(Dataset(x, y), cfg, 0);
  std::vector<int> labels = blobs.resp.hard_labels();
  CHECK(metrics::adjusted_rand(labels, truth) == doctest::Approx(1.0));
}

TEST_CASE("objective traces") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto sim = toy(200 + seed);
    SUBCASE("NJ never decreases") {
      const auto runs = em::run_starts(sim.data, config(Scheme::NJ, seed));
      for (const auto& r : runs) {
        CHECK_FALSE(r.discarded);
        for (std::size_t t = 1; t < r.objective_trace.size(); ++t)
          CHECK(r.objective_trace[t] >= r.objective_trace[t - 1] - 1e-8 * std::abs(r.objective_trace[t - 1]));
      }
    }
    SUBCASE("FLasso never decreases outside its refit") {
      const auto runs = em::run_starts(sim.data, config(Scheme::FLasso, seed));
      for (const auto& r : runs) {
        if (r.discarded) continue;
        CHECK(r.refit_index.has_value());
        for (std::size_t t = 1; t < r.objective_trace.size(); ++t) {
          if (r.refit_index && static_cast<int>(t) == *r.refit_index) continue;
          CHECK(r.objective_trace[t] >= r.objective_trace[t - 1] - 1e-8 * std::abs(r.objective_trace[t - 1]));
        }
      }
    }
    SUBCASE("RLasso stays finite and ends above its start") {
      const auto r = em::run_start(sim.data, config(Scheme::RLasso, seed), 0);
      for (double v : r.objective_trace) CHECK(std::isfinite(v));
      if (!r.discarded) CHECK(r.objective_trace.back() >= r.objective_trace.front());
    }
  }
}

TEST_CASE("invariants hold after every iteration") {
  const auto sim = toy(9);
  for (auto s : {Scheme::NJ, Scheme::FLasso, Scheme::RLasso}) {
    const auto cfg = config(s, 9);
    auto state = em::initialize(sim.data, cfg, 0);
    for (int it = 0; it < 10; ++it) {
      em::iterate(sim.data, cfg, state);
      CHECK_NOTHROW(check_responsibilities(state.resp, 1e-12));
      CHECK_NOTHROW(check_params(state.params));
    }
  }
}

TEST_CASE("sample permutation equivariance") {
  const auto sim = toy(10);
  Rng rng = make_rng(10);
  const auto perm = oracle::random_permutation(rng, sim.data.n());
  const Dataset pd = permute(sim.data, perm);
  for (auto s : {Scheme::NJ, Scheme::RLasso}) {
    const auto cfg = config(s, 4);
    auto a = em::initialize(sim.data, cfg, 0);
    auto b = a;
    b.resp = Responsibilities(permute_rows(a.resp.m, perm));
    for (int it = 0; it < 10; ++it) {
      em::iterate(sim.data, cfg, a);
      em::iterate(pd, cfg, b);
    }
    for (std::size_t k = 0; k < 2; ++k) CHECK(max_param_diff(a.params[k], b.params[k]) < 1e-10);
    CHECK((permute_rows(a.resp.m, perm) - b.resp.m).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("relabeling clusters leaves the objective unchanged") {
  const auto sim = toy(11);
  for (auto s : {Scheme::NJ, Scheme::FLasso, Scheme::RLasso}) {
    const auto cfg = config(s, 2);
    const auto f = em::fit(sim.data, cfg);
    std::vector<ClusterParams> swapped{f.params[1], f.params[0]};
    Matrix m(f.resp.m.rows(), 2);
    m << f.resp.m.col(1), f.resp.m.col(0);
    const Responsibilities rs(m);
    const double psi = em::universal_psi(sim.data.n(), sim.data.p());
    const double q = em::objective(sim.data, f.params, f.resp, s, psi, cfg.c);
    CHECK(std::abs(em::objective(sim.data, swapped, rs, s, psi, cfg.c) - q) <= 1e-10 * std::abs(q));
    const double l = em::penalized_loglik(sim.data, f.params, s, psi, cfg.c);
    CHECK(std::abs(em::penalized_loglik(sim.data, swapped, s, psi, cfg.c) - l) <= 1e-10 * std::abs(l));
  }
}

TEST_CASE("fit") {
  const auto sim = toy(12);
  SUBCASE("one group has unit responsibilities") {
    const auto f = em::fit(sim.data, config(Scheme::NJ, 1, 1));
    CHECK(f.resp.m.isOnes(0.0));
    CHECK(std::all_of(f.labels.begin(), f.labels.end(), [](int l) { return l == 1; }));
  }
  SUBCASE("picks the best surviving start") {
    auto cfg = config(Scheme::NJ, 5);
    cfg.n_starts = 4;
    const auto runs = em::run_starts(sim.data, cfg);
    const auto best = em::fit(sim.data, cfg);
    for (const auto& r : runs)
      if (!r.discarded) CHECK(best.objective_trace.back() >= r.objective_trace.back());
    const auto labels = best.resp.hard_labels();
    for (std::size_t i = 0; i < labels.size(); ++i) CHECK(best.labels[i] == labels[i] + 1);
  }
  SUBCASE("threads do not change the result") {
    auto cfg = config(Scheme::NJ, 6);
    cfg.n_starts = 4;
    const auto serial = em::fit(sim.data, cfg);
    cfg.threads = 3;
    int calls = 0;
    const auto parallel = em::fit(sim.data, cfg, [&](const IterationRecord&) { ++calls; });
    CHECK(serial.objective_trace == parallel.objective_trace);
    CHECK(serial.labels == parallel.labels);
    CHECK(calls > 0);
  }
  SUBCASE("identical rows terminate without numerical failure") {
    Matrix x = Matrix::Ones(60, 4);
    Vector y = Vector::Ones(60);
    auto cfg = config(Scheme::NJ, 1);
    const auto r = em::run_start(Dataset(x, y), cfg, 0);
    CHECK((r.discarded || r.converged || r.iterations == cfg.max_iter));
    if (r.discarded) CHECK_FALSE(r.failure.empty());
    CHECK_THROWS_AS(em::fit(Dataset(x, y), cfg), FitError);
  }
  SUBCASE("too many groups trip the collapse guard") {
    auto cfg = config(Scheme::NJ, 1, 8);
    cfg.n_starts = 2;
    CHECK_THROWS_AS(em::fit(sim.data, cfg), FitError);
  }
}
