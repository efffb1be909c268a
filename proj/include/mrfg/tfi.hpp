#pragma once
// Topological feature informativeness: propagate features one hop
// through the row-normalized graph, then score each dimension by its
// mutual information with the training labels. The propagation subgraph
// for ranking covers training users and their attached tweet nodes only,
// so validation/test features can never influence the ranking.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mrfg/core.hpp"
#include "mrfg/graph.hpp"
#include "mrfg/matrix.hpp"

namespace mrfg {

// Row-stochastic (over in-edges) adjacency in CSR form. User rows always
// sum to 1 thanks to the self-loop; tweet rows have no in-edges and stay
// all-zero.
struct NormalizedAdjacency {
  size_t n = 0;
  std::vector<size_t> row_ptr;  // size n+1
  std::vector<size_t> col_idx;  // ascending within each row
  std::vector<double> values;   // 1/indeg(row)
};

NormalizedAdjacency normalize_adjacency(const SocialGraph& graph);

// X_tilde = A_hat X, one hop.
Matrix propagate(const NormalizedAdjacency& adj, const Matrix& features);

// Equal-frequency discretization into at most `bins` buckets. Equal
// values always share a bucket. Returns the bucket id per element.
std::vector<int> equal_frequency_bins(const std::vector<double>& column, size_t bins);

// Plug-in mutual information (nats) between labels and the discretized
// column, computed as H(Y) + H(B) - H(Y,B). Never negative.
double mutual_information(const std::vector<StanceLabel>& labels,
                          const std::vector<double>& column, size_t bins);

struct FmiRanking {
  std::vector<size_t> order;   // dims, descending score, ties by ascending dim
  std::vector<double> scores;  // indexed by dim
  std::string computed_on = "train";
  size_t bins = 16;
};

FmiRanking rank_tfi(const SocialGraph& graph, const Matrix& features,
                    const std::vector<std::optional<StanceLabel>>& user_labels,
                    const std::vector<size_t>& train_user_indices, size_t bins);

// Top max(1, round(r*d)) ranked dims go to the graph path, the rest to
// the MLP path; both keep ranking order. r must lie in (0,1).
struct FeatureRouting {
  std::vector<size_t> graph_cols;
  std::vector<size_t> mlp_cols;
};

FeatureRouting route_features(const FmiRanking& ranking, double r);
FeatureRouting route_all_graph(const FmiRanking& ranking);
FeatureRouting route_all_mlp(const FmiRanking& ranking);

std::pair<Matrix, Matrix> split_features(const Matrix& features, const FmiRanking& ranking,
                                         double r);

void save_ranking(const FmiRanking& ranking, const std::string& target, uint64_t seed,
                  const std::string& path);
FmiRanking load_ranking(const std::string& path);

}  // namespace mrfg
