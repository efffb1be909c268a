#pragma once
// Independent oracles shared by the unit and acceptance suites. These
// deliberately re-derive results from first principles (dense matrices,
// direct joint-histogram sums, finite differences) without touching the
// implementation paths they check.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "mrfg/core.hpp"
#include "mrfg/graph.hpp"
#include "mrfg/matrix.hpp"

namespace oracle {

// Equal-frequency bucket assignment, re-derived from the documented
// rule: cut after sorted position k*n/bins - 1, duplicates collapsed,
// value v lands in the first bucket whose edge is >= v.
inline std::vector<int> bucketize(const std::vector<double>& column, size_t bins) {
  std::vector<double> sorted(column);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (size_t k = 1; k < bins; ++k) {
    const size_t cut = k * column.size() / bins;
    if (cut == 0 || cut >= column.size()) continue;
    const double e = sorted[cut - 1];
    if (edges.empty() || e != edges.back()) edges.push_back(e);
  }
  std::vector<int> bucket(column.size());
  for (size_t i = 0; i < column.size(); ++i)
    bucket[i] = static_cast<int>(
        std::lower_bound(edges.begin(), edges.end(), column[i]) - edges.begin());
  return bucket;
}

// Plug-in MI by direct joint-histogram enumeration:
// sum over (y,b) of p(y,b) * ln(p(y,b) / (p(y) p(b))), with probabilities
// kept as integer-count ratios.
inline double mutual_information(const std::vector<mrfg::StanceLabel>& labels,
                                 const std::vector<double>& column, size_t bins) {
  const std::vector<int> bucket = bucketize(column, bins);
  const double n = static_cast<double>(labels.size());
  std::map<int, double> cy, cb;
  std::map<std::pair<int, int>, double> cyb;
  for (size_t i = 0; i < labels.size(); ++i) {
    const int y = mrfg::class_index(labels[i]);
    cy[y] += 1.0;
    cb[bucket[i]] += 1.0;
    cyb[{y, bucket[i]}] += 1.0;
  }
  double mi = 0.0;
  for (const auto& [yb, c] : cyb)
    mi += (c / n) * std::log(c * n / (cy[yb.first] * cb[yb.second]));
  return mi;
}

// Ranking comparison that stays meaningful under exact mathematical
// ties: between tie groups (oracle scores differing by more than eps)
// the order must match exactly; within a tie group the implementation
// may permute.
inline bool same_ranking(const std::vector<size_t>& mine, const std::vector<size_t>& oracle_order,
                         const std::vector<double>& oracle_scores, double eps = 1e-9) {
  if (mine.size() != oracle_order.size()) return false;
  size_t i = 0;
  while (i < oracle_order.size()) {
    size_t j = i + 1;
    while (j < oracle_order.size() &&
           std::abs(oracle_scores[oracle_order[j - 1]] - oracle_scores[oracle_order[j]]) <= eps)
      ++j;
    std::vector<size_t> a(mine.begin() + i, mine.begin() + j);
    std::vector<size_t> b(oracle_order.begin() + i, oracle_order.begin() + j);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) return false;
    i = j;
  }
  return true;
}

// Dense row-stochastic adjacency over a node subset (train users plus
// their attached tweet nodes), then dense matmul and per-column MI.
struct DenseRanking {
  std::vector<size_t> order;
  std::vector<double> scores;
};

inline DenseRanking rank_tfi_dense(const mrfg::SocialGraph& graph, const mrfg::Matrix& features,
                                   const std::vector<std::optional<mrfg::StanceLabel>>& user_labels,
                                   const std::vector<size_t>& train_user_indices, size_t bins) {
  using mrfg::Matrix;
  std::vector<size_t> train(train_user_indices);
  std::sort(train.begin(), train.end());

  // Node subset in ascending global index: train users then tweets
  // attached to them (tweet indices always exceed user indices).
  std::vector<size_t> nodes(train);
  std::vector<uint8_t> is_train(graph.user_count(), 0);
  for (size_t u : train) is_train[u] = 1;
  for (size_t j = 0; j < graph.tweets.size(); ++j)
    if (is_train[graph.tweets[j].user_node]) nodes.push_back(graph.user_count() + j);

  std::map<size_t, size_t> local;  // global -> subset index
  for (size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = i;

  const size_t n = nodes.size();
  Matrix dense(n, n);
  for (const auto& e : graph.edges) {
    auto src = local.find(e.src);
    auto dst = local.find(e.dst);
    if (src == local.end() || dst == local.end()) continue;
    dense(dst->second, src->second) = 1.0;  // mark, normalize below
  }
  for (size_t i = 0; i < n; ++i) {
    double indeg = 0.0;
    for (size_t j = 0; j < n; ++j) indeg += dense(i, j);
    if (indeg > 0.0)
      for (size_t j = 0; j < n; ++j) dense(i, j) /= indeg;
  }

  Matrix sub(n, features.cols());
  for (size_t i = 0; i < n; ++i)
    for (size_t c = 0; c < features.cols(); ++c) sub(i, c) = features(nodes[i], c);

  // Dense propagate with ascending-j accumulation.
  Matrix prop(n, features.cols());
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      const double a = dense(i, j);
      if (a == 0.0) continue;
      for (size_t c = 0; c < features.cols(); ++c) prop(i, c) += a * sub(j, c);
    }

  std::vector<mrfg::StanceLabel> labels;
  for (size_t u : train) labels.push_back(*user_labels[u]);

  DenseRanking out;
  out.scores.resize(features.cols());
  for (size_t c = 0; c < features.cols(); ++c) {
    std::vector<double> column;
    for (size_t i = 0; i < train.size(); ++i) column.push_back(prop(i, c));
    out.scores[c] = std::max(0.0, oracle::mutual_information(labels, column, bins));
  }
  out.order.resize(features.cols());
  std::iota(out.order.begin(), out.order.end(), 0);
  std::sort(out.order.begin(), out.order.end(), [&](size_t a, size_t b) {
    if (out.scores[a] != out.scores[b]) return out.scores[a] > out.scores[b];
    return a < b;
  });
  return out;
}

// Confusion-matrix metrics recomputed naively.
struct DenseMetrics {
  double f_favor, f_against, accuracy;
};

inline DenseMetrics metrics_bruteforce(const std::vector<mrfg::StanceLabel>& gold,
                                       const std::vector<mrfg::StanceLabel>& pred) {
  auto f1_of = [&](mrfg::StanceLabel cls) {
    double tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < gold.size(); ++i) {
      if (pred[i] == cls && gold[i] == cls) tp += 1;
      if (pred[i] == cls && gold[i] != cls) fp += 1;
      if (pred[i] != cls && gold[i] == cls) fn += 1;
    }
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  };
  double correct = 0;
  for (size_t i = 0; i < gold.size(); ++i)
    if (gold[i] == pred[i]) correct += 1;
  return {f1_of(mrfg::StanceLabel::Favor), f1_of(mrfg::StanceLabel::Against),
          correct / static_cast<double>(gold.size())};
}

}  // namespace oracle
