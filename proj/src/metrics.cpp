#include "rjm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace rjm::metrics {
namespace {

double choose2(double x) { return x * (x - 1.0) / 2.0; }

std::map<int, int> index_of(const std::vector<int>& labels) {
  std::map<int, int> idx;
  for (int l : labels) idx.emplace(l, 0);
  int next = 0;
  for (auto& [label, i] : idx) i = next++;
  return idx;
}

}  // namespace

ContingencyTable ContingencyTable::from_labels(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DomainError("contingency table: label vectors differ in length");
  const auto ia = index_of(a);
  const auto ib = index_of(b);
  ContingencyTable t;
  t.counts = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(ia.size()), static_cast<Eigen::Index>(ib.size()));
  for (std::size_t i = 0; i < a.size(); ++i) ++t.counts(ia.at(a[i]), ib.at(b[i]));
  return t;
}

double adjusted_rand(const std::vector<int>& labels_a, const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size()) throw DomainError("adjusted_rand: label vectors differ in length");
  if (labels_a.size() < 2) throw DomainError("adjusted_rand: need at least two samples");
  const auto t = ContingencyTable::from_labels(labels_a, labels_b);
  const Eigen::MatrixXd c = t.counts.cast<double>();
  double index = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) index += choose2(c(i, j));
  double sum_a = 0.0, sum_b = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) sum_a += choose2(c.row(i).sum());
  for (Eigen::Index j = 0; j < c.cols(); ++j) sum_b += choose2(c.col(j).sum());
  const double expected = sum_a * sum_b / choose2(static_cast<double>(labels_a.size()));
  const double max_index = 0.5 * (sum_a + sum_b);
  const double den = max_index - expected;
  if (den == 0.0) {
    // Both partitions trivial (all singletons or a single block).
    return (c.rows() == c.cols() && index == max_index) ? 1.0 : 0.0;
  }
  return (index - expected) / den;
}

double selection_auc(const std::vector<bool>& true_support, const Vector& scores) {
  if (static_cast<Eigen::Index>(true_support.size()) != scores.size())
    throw DomainError("selection_auc: support and scores differ in length");
  const auto p = scores.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Vector a = scores.cwiseAbs();
  std::sort(order.begin(), order.end(), [&](Eigen::Index l, Eigen::Index r) { return a(l) < a(r); });

  // Midranks over tied groups.
  Vector rank(p);
  for (Eigen::Index s = 0; s < p;) {
    Eigen::Index e = s;
    while (e + 1 < p && a(order[static_cast<std::size_t>(e + 1)]) == a(order[static_cast<std::size_t>(s)])) ++e;
    const double mid = 0.5 * static_cast<double>(s + e) + 1.0;
    for (Eigen::Index r = s; r <= e; ++r) rank(order[static_cast<std::size_t>(r)]) = mid;
    s = e + 1;
  }
  double n_pos = 0.0, rank_sum = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (true_support[static_cast<std::size_t>(j)]) {
      n_pos += 1.0;
      rank_sum += rank(j);
    }
  }
  const double n_neg = static_cast<double>(p) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) throw DomainError("selection_auc: support must contain true and false entries");
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double coef_rmse_standardized(const Vector& beta_hat, const Vector& beta_true, const Vector& x_sd) {
  if (beta_hat.size() != beta_true.size() || beta_hat.size() != x_sd.size())
    throw DomainError("coef_rmse_standardized: length mismatch");
  if (beta_hat.size() == 0) throw DomainError("coef_rmse_standardized: empty input");
  if ((x_sd.array() <= 0.0).any()) throw DomainError("coef_rmse_standardized: sds must be positive");
  const Vector diff = (beta_hat - beta_true).cwiseProduct(x_sd);
  return std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
}

Vector inclusion_frequencies(const std::vector<Vector>& fits, double threshold) {
  if (fits.empty()) throw DomainError("inclusion_frequencies: no fits");
  Vector freq = Vector::Zero(fits.front().size());
  for (const auto& b : fits) {
    if (b.size() != freq.size()) throw DomainError("inclusion_frequencies: fits differ in length");
    freq.array() += (b.array().abs() > threshold).cast<double>();
  }
  return freq / static_cast<double>(fits.size());
}

std::vector<int> best_label_matching(const std::vector<int>& fitted, const std::vector<int>& reference, int k) {
  if (fitted.size() != reference.size()) throw DomainError("best_label_matching: length mismatch");
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 1);
  std::vector<int> best = perm;
  long best_hits = -1;
  do {
    long hits = 0;
    for (std::size_t i = 0; i < fitted.size(); ++i)
      hits += perm[static_cast<std::size_t>(fitted[i] - 1)] == reference[i];
    if (hits > best_hits) {
      best_hits = hits;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace rjm::metrics
