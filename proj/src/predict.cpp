#include "rjm/predict.hpp"

#include "rjm/em.hpp"
#include "rjm/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rjm {

Allocation allocate(const Vector& x_star, const std::vector<ClusterParams>& params) {
  if (params.empty()) throw DomainError("allocate: no clusters");
  const auto k = static_cast<Eigen::Index>(params.size());
  Vector logp(k);
  for (Eigen::Index g = 0; g < k; ++g) {
    const auto& c = params[static_cast<std::size_t>(g)];
    if (x_star.size() != c.mu.size()) throw DomainError("allocate: feature dimension mismatch");
    const Vector d = x_star - c.mu;
    logp(g) = std::log(c.tau) + 0.5 * c.log_det_omega - 0.5 * d.dot(c.omega * d);
  }
  const double mx = logp.maxCoeff();
  if (!std::isfinite(mx)) throw DomainError("allocate: every group density underflows");
  Allocation a;
  a.probs = (logp.array() - mx).exp();
  a.probs /= a.probs.sum();
  Eigen::Index best = 0;
  a.probs.maxCoeff(&best);
  a.hard = static_cast<int>(best) + 1;
  return a;
}

double predict_y(const Vector& x_star, const std::vector<ClusterParams>& params) {
  const auto& c = params[static_cast<std::size_t>(allocate(x_star, params).hard - 1)];
  return c.alpha + x_star.dot(c.beta);
}

Selection select_k(const Dataset& train, const Dataset& test, const std::vector<int>& candidate_ks,
                   const FitConfig& config) {
  if (candidate_ks.empty()) throw DomainError("select_k: no candidates");
  if (test.n() == 0) throw DomainError("select_k: empty test set");
  Selection out;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int k : candidate_ks) {
    if (k < 1) throw DomainError("select_k: candidate k must be >= 1");
    FitConfig cfg = config;
    cfg.k = k;
    FitResult fit;
    try {
      fit = em::fit(train, cfg);
    } catch (const std::exception& e) {
      out.warnings.push_back("k=" + std::to_string(k) + " excluded: " + e.what());
      continue;
    }
    std::vector<double> sse(static_cast<std::size_t>(k), 0.0);
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < test.n(); ++i) {
      const Vector x = test.x.row(i).transpose();
      const int g = allocate(x, fit.params).hard - 1;
      const auto& c = fit.params[static_cast<std::size_t>(g)];
      const double r = test.y(i) - c.alpha - x.dot(c.beta);
      sse[static_cast<std::size_t>(g)] += r * r;
      ++count[static_cast<std::size_t>(g)];
    }
    std::vector<LossRow> rows;
    double total = 0.0;
    int nonempty = 0;
    for (int g = 0; g < k; ++g) {
      LossRow row;
      row.k = k;
      row.group = g + 1;
      row.n_test = count[static_cast<std::size_t>(g)];
      row.mse = row.n_test > 0 ? sse[static_cast<std::size_t>(g)] / row.n_test : std::numeric_limits<double>::quiet_NaN();
      if (row.n_test > 0) {
        total += row.mse;
        ++nonempty;
      }
      rows.push_back(row);
    }
    if (nonempty == 0) {
      out.warnings.push_back("k=" + std::to_string(k) + " excluded: every test group is empty");
      continue;
    }
    if (nonempty < k)
      out.warnings.push_back("k=" + std::to_string(k) + ": " + std::to_string(k - nonempty) +
                             " empty test group(s) left out of the mean");
    const double mean = total / nonempty;
    for (auto& r : rows) r.mean_mse = mean;
    out.losses.insert(out.losses.end(), rows.begin(), rows.end());
    if (mean < best_loss) {
      best_loss = mean;
      out.best_k = k;
    }
  }
  if (out.best_k == 0) throw DomainError("select_k: every candidate was excluded");
  return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double frac, std::uint64_t seed) {
  if (!(frac > 0.0 && frac < 1.0)) throw DomainError("train_test_split: fraction must lie in (0, 1)");
  const Eigen::Index n = data.n();
  const auto n_train = static_cast<Eigen::Index>(std::ceil(frac * static_cast<double>(n)));
  if (n_train >= n) throw DomainError("train_test_split: test set would be empty");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng = make_rng(seed, {0x5917});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Eigen::Index> tr(order.begin(), order.begin() + n_train);
  std::vector<Eigen::Index> te(order.begin() + n_train, order.end());
  return {data.subset(tr), data.subset(te)};
}

}  // namespace rjm
