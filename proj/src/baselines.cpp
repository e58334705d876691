#include "rjm/baselines.hpp"

#include <cmath>
#include <limits>

namespace rjm::baselines {
namespace {

KMeansResult lloyd(const Matrix& x, Matrix centers, int max_iter) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = centers.rows();
  KMeansResult out;
  out.labels.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (centers.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (out.labels[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
        out.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sums = Matrix::Zero(k, x.cols());
    Vector counts = Vector::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto g = out.labels[static_cast<std::size_t>(i)];
      sums.row(g) += x.row(i);
      counts(g) += 1.0;
    }
    for (Eigen::Index g = 0; g < k; ++g)
      if (counts(g) > 0.0) centers.row(g) = sums.row(g) / counts(g);
  }
  out.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    out.inertia += (x.row(i) - centers.row(out.labels[static_cast<std::size_t>(i)])).squaredNorm();
  out.centers = std::move(centers);
  return out;
}

Matrix plus_plus_seeds(const Matrix& x, int k, Rng& rng) {
  const Eigen::Index n = x.rows();
  Matrix centers(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.row(0) = x.row(pick(rng));
  Vector d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index chosen = pick(rng);
    if (total > 0.0) {
      double target = unif(rng) * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2(i);
        if (target <= 0.0) {
          chosen = i;
          break;
        }
      }
    }
    centers.row(c) = x.row(chosen);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace

Matrix standardize(const Matrix& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Matrix z = x.rowwise() - mean;
  const double denom = std::max<double>(1.0, static_cast<double>(x.rows()) - 1.0);
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double sd = std::sqrt(z.col(j).squaredNorm() / denom);
    if (sd > 0.0) z.col(j) /= sd;
  }
  return z;
}

KMeansResult kmeans(const Matrix& x, int k, int restarts, Rng& rng, int max_iter) {
  if (k < 1) throw DomainError("kmeans: k must be >= 1");
  if (x.rows() < k) throw DomainError("kmeans: fewer rows than clusters");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(restarts, 1); ++r) {
    auto run = lloyd(x, plus_plus_seeds(x, k, rng), max_iter);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

GmmResult gmm(const Matrix& x, int k, std::uint64_t seed, int max_iter, double tol, double ridge) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  Rng rng = make_rng(seed, {0x67});
  const auto init = kmeans(standardize(x), k, 10, rng);

  Matrix m = Matrix::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) m(i, init.labels[static_cast<std::size_t>(i)]) = 1.0;

  GmmResult out;
  double prev = -std::numeric_limits<double>::infinity();
  constexpr double kLog2Pi = 1.8378770664093454836;
  for (int it = 0; it < max_iter; ++it) {
    Matrix logp(n, k);
    for (int g = 0; g < k; ++g) {
      const Vector w = m.col(g);
      const double nk = w.sum();
      if (!(nk > 1e-10)) {
        logp.col(g).setConstant(-std::numeric_limits<double>::infinity());
        continue;
      }
      const Eigen::RowVectorXd mu = (w.transpose() * x) / nk;
      const Matrix d = x.rowwise() - mu;
      Matrix cov = d.transpose() * w.asDiagonal() * d / nk;
      cov.diagonal().array() += ridge;
      Eigen::LLT<Matrix> llt(cov);
      if (llt.info() != Eigen::Success) throw DomainError("gmm: covariance not positive definite");
      const Matrix l = llt.matrixL();
      const double log_det = 2.0 * l.diagonal().array().log().sum();
      const Matrix z = llt.matrixL().solve(d.transpose());
      logp.col(g) = (-0.5 * (z.colwise().squaredNorm().transpose().array() + log_det + p * kLog2Pi) +
                     std::log(nk / static_cast<double>(n)))
                        .matrix();
    }
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mx = logp.row(i).maxCoeff();
      const Eigen::RowVectorXd e = (logp.row(i).array() - mx).exp();
      const double s = e.sum();
      m.row(i) = e / s;
      ll += mx + std::log(s);
    }
    out.iterations = it + 1;
    out.loglik = ll;
    if (std::abs(ll - prev) <= tol * std::max(1.0, std::abs(ll))) {
      out.converged = true;
      break;
    }
    prev = ll;
  }
  out.resp = Responsibilities(m);
  out.labels = out.resp.hard_labels();
  return out;
}

}  // namespace rjm::baselines
