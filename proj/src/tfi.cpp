#include "mrfg/tfi.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mrfg/jsonl.hpp"

namespace mrfg {

NormalizedAdjacency normalize_adjacency(const SocialGraph& graph) {
  NormalizedAdjacency adj;
  adj.n = graph.node_count();

  std::vector<std::vector<size_t>> in_edges(adj.n);
  for (const auto& e : graph.edges) in_edges[e.dst].push_back(e.src);

  adj.row_ptr.assign(adj.n + 1, 0);
  for (size_t i = 0; i < adj.n; ++i) adj.row_ptr[i + 1] = adj.row_ptr[i] + in_edges[i].size();
  adj.col_idx.reserve(adj.row_ptr[adj.n]);
  adj.values.reserve(adj.row_ptr[adj.n]);
  for (size_t i = 0; i < adj.n; ++i) {
    auto& srcs = in_edges[i];
    std::sort(srcs.begin(), srcs.end());
    const double w = srcs.empty() ? 0.0 : 1.0 / static_cast<double>(srcs.size());
    for (size_t s : srcs) {
      adj.col_idx.push_back(s);
      adj.values.push_back(w);
    }
  }
  return adj;
}

Matrix propagate(const NormalizedAdjacency& adj, const Matrix& features) {
  if (adj.n != features.rows()) throw Error("propagate: adjacency/feature row mismatch");
  Matrix out(features.rows(), features.cols());
  for (size_t i = 0; i < adj.n; ++i) {
    double* dst = out.row_ptr(i);
    for (size_t e = adj.row_ptr[i]; e < adj.row_ptr[i + 1]; ++e) {
      const double w = adj.values[e];
      const double* src = features.row_ptr(adj.col_idx[e]);
      for (size_t c = 0; c < features.cols(); ++c) dst[c] += w * src[c];
    }
  }
  return out;
}

std::vector<int> equal_frequency_bins(const std::vector<double>& column, size_t bins) {
  if (bins < 2) throw Error("bins must be >= 2");
  const size_t n = column.size();
  std::vector<double> sorted(column);
  std::sort(sorted.begin(), sorted.end());

  // Cut after sorted position k*n/bins - 1; duplicate edges collapse so
  // equal values always land in the same bucket.
  std::vector<double> edges;
  for (size_t k = 1; k < bins; ++k) {
    const size_t cut = k * n / bins;
    if (cut == 0 || cut >= n) continue;
    const double e = sorted[cut - 1];
    if (edges.empty() || e != edges.back()) edges.push_back(e);
  }

  std::vector<int> bucket(n);
  for (size_t i = 0; i < n; ++i) {
    const auto it = std::lower_bound(edges.begin(), edges.end(), column[i]);
    bucket[i] = static_cast<int>(it - edges.begin());
  }
  return bucket;
}

namespace {

double entropy_from_counts(const std::vector<double>& counts, double n) {
  double h = 0.0;
  for (double c : counts)
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  return h;
}

}  // namespace

double mutual_information(const std::vector<StanceLabel>& labels,
                          const std::vector<double>& column, size_t bins) {
  if (labels.size() != column.size()) throw Error("mutual_information: length mismatch");
  if (labels.size() < 2) throw Error("mutual_information: need at least 2 samples");

  const std::vector<int> bucket = equal_frequency_bins(column, bins);
  const int n_buckets = 1 + *std::max_element(bucket.begin(), bucket.end());
  const double n = static_cast<double>(labels.size());

  std::vector<double> label_counts(kNumClasses, 0.0);
  std::vector<double> bucket_counts(n_buckets, 0.0);
  std::vector<double> joint_counts(kNumClasses * n_buckets, 0.0);
  for (size_t i = 0; i < labels.size(); ++i) {
    const int y = class_index(labels[i]);
    label_counts[y] += 1.0;
    bucket_counts[bucket[i]] += 1.0;
    joint_counts[y * n_buckets + bucket[i]] += 1.0;
  }

  const double mi = entropy_from_counts(label_counts, n) + entropy_from_counts(bucket_counts, n) -
                    entropy_from_counts(joint_counts, n);
  return mi > 0.0 ? mi : 0.0;
}

FmiRanking rank_tfi(const SocialGraph& graph, const Matrix& features,
                    const std::vector<std::optional<StanceLabel>>& user_labels,
                    const std::vector<size_t>& train_user_indices, size_t bins) {
  if (features.rows() != graph.node_count()) throw Error("rank_tfi: feature rows != node count");
  if (user_labels.size() != graph.user_count()) throw Error("rank_tfi: label count != user count");
  if (train_user_indices.size() < 2) throw Error("rank_tfi: need at least 2 training users");

  std::vector<size_t> train(train_user_indices);
  std::sort(train.begin(), train.end());
  for (size_t i : train) {
    if (i >= graph.user_count()) throw Error("rank_tfi: train index is not a user node");
    if (!user_labels[i]) throw Error("rank_tfi: unlabeled training user " + graph.users[i].id);
  }

  // Attached tweet nodes per training user, ascending node index.
  std::vector<uint8_t> is_train(graph.user_count(), 0);
  for (size_t i : train) is_train[i] = 1;
  std::vector<std::vector<size_t>> attached(graph.user_count());
  for (size_t j = 0; j < graph.tweets.size(); ++j) {
    const size_t owner = graph.tweets[j].user_node;
    if (is_train[owner]) attached[owner].push_back(graph.user_count() + j);
  }

  // Propagated rows for training users over the train-only subgraph:
  // row = (self + attached tweets) / indeg.
  const size_t d = features.cols();
  Matrix train_rows(train.size(), d);
  std::vector<StanceLabel> labels;
  labels.reserve(train.size());
  for (size_t t = 0; t < train.size(); ++t) {
    const size_t u = train[t];
    labels.push_back(*user_labels[u]);
    const double w = 1.0 / static_cast<double>(1 + attached[u].size());
    double* dst = train_rows.row_ptr(t);
    const double* self = features.row_ptr(u);
    for (size_t c = 0; c < d; ++c) dst[c] += w * self[c];
    for (size_t node : attached[u]) {
      const double* src = features.row_ptr(node);
      for (size_t c = 0; c < d; ++c) dst[c] += w * src[c];
    }
  }

  FmiRanking ranking;
  ranking.bins = bins;
  ranking.computed_on = "train";
  ranking.scores.resize(d);
  std::vector<double> column(train.size());
  for (size_t m = 0; m < d; ++m) {
    for (size_t t = 0; t < train.size(); ++t) column[t] = train_rows(t, m);
    ranking.scores[m] = mutual_information(labels, column, bins);
  }
  ranking.order.resize(d);
  std::iota(ranking.order.begin(), ranking.order.end(), 0);
  std::sort(ranking.order.begin(), ranking.order.end(), [&](size_t a, size_t b) {
    if (ranking.scores[a] != ranking.scores[b]) return ranking.scores[a] > ranking.scores[b];
    return a < b;
  });
  return ranking;
}

FeatureRouting route_features(const FmiRanking& ranking, double r) {
  if (!(r > 0.0 && r < 1.0)) throw Error("feature ratio r must lie in (0,1)");
  const size_t d = ranking.order.size();
  if (d == 0) throw Error("empty ranking");
  size_t k = static_cast<size_t>(std::llround(r * static_cast<double>(d)));
  k = std::max<size_t>(1, std::min(k, d));
  FeatureRouting routing;
  routing.graph_cols.assign(ranking.order.begin(), ranking.order.begin() + k);
  routing.mlp_cols.assign(ranking.order.begin() + k, ranking.order.end());
  return routing;
}

FeatureRouting route_all_graph(const FmiRanking& ranking) {
  FeatureRouting routing;
  routing.graph_cols = ranking.order;
  return routing;
}

FeatureRouting route_all_mlp(const FmiRanking& ranking) {
  FeatureRouting routing;
  routing.mlp_cols = ranking.order;
  return routing;
}

std::pair<Matrix, Matrix> split_features(const Matrix& features, const FmiRanking& ranking,
                                         double r) {
  FeatureRouting routing = route_features(ranking, r);
  return {features.select_columns(routing.graph_cols), features.select_columns(routing.mlp_cols)};
}

void save_ranking(const FmiRanking& ranking, const std::string& target, uint64_t seed,
                  const std::string& path) {
  save_json_file(path, Json{{"target", target},
                            {"seed", seed},
                            {"bins", ranking.bins},
                            {"computed_on", ranking.computed_on},
                            {"order", ranking.order},
                            {"scores", ranking.scores}});
}

FmiRanking load_ranking(const std::string& path) {
  Json j = load_json_file(path);
  FmiRanking ranking;
  ranking.bins = j.at("bins").get<size_t>();
  ranking.computed_on = j.at("computed_on").get<std::string>();
  ranking.order = j.at("order").get<std::vector<size_t>>();
  ranking.scores = j.at("scores").get<std::vector<double>>();
  if (ranking.order.size() != ranking.scores.size()) throw Error("corrupt ranking file " + path);
  return ranking;
}

}  // namespace mrfg
