#pragma once
// Dual-path stance model: a 2-layer relation-typed graph convolution over
// the graph-favored feature block, a 2-layer MLP over the rest, fused by
// a linear classifier over the concatenation. Training is full-graph
// gradient descent with adaptive-moment updates and hand-derived
// backprop; the finite-difference suite in tests/ keeps it honest.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mrfg/core.hpp"
#include "mrfg/graph.hpp"
#include "mrfg/ingest.hpp"
#include "mrfg/matrix.hpp"
#include "mrfg/rng.hpp"
#include "mrfg/tfi.hpp"

namespace mrfg {

struct GsiConfig {
  double r = 0.3;
  size_t hidden_dim = 64;
  double learning_rate = 1e-3;
  size_t epochs = 200;
  size_t patience = 20;
  uint64_t seed = 0;
  bool relu_last_rgcn_layer = false;  // restores the nonlinearity on layer 2
  bool class_weighting = false;

  void validate() const {
    if (hidden_dim < 2) throw Error("hidden_dim must be >= 2");
    if (learning_rate <= 0) throw Error("learning_rate must be > 0");
  }
};

// Per-relation in-edge CSR, one block per RelationKind, with weights
// 1/c(i,relation) where c counts node i's in-neighbors under that
// relation alone.
struct RelationAdjacency {
  size_t n = 0;
  std::array<std::vector<size_t>, kNumRelations> row_ptr;
  std::array<std::vector<size_t>, kNumRelations> col_idx;
  std::array<std::vector<double>, kNumRelations> values;
};

RelationAdjacency build_relation_adjacency(const SocialGraph& graph);

// Weight layout: rows = input dim, cols = output dim; h' = h W.
struct RgcnLayerWeights {
  std::array<Matrix, kNumRelations> relation;  // W_zeta
  Matrix self;                                 // W_0
};

struct GsiModel {
  FeatureRouting routing;
  size_t hidden = 0;
  bool relu_last_rgcn_layer = false;

  std::array<RgcnLayerWeights, 2> rgcn;      // empty matrices when graph path is off
  Matrix mlp_w1, mlp_w2;                     // empty when MLP path is off
  std::vector<double> mlp_b1, mlp_b2;
  Matrix clf_w;                              // fused width x kNumClasses
  std::vector<double> clf_b;

  size_t graph_width() const { return routing.graph_cols.empty() ? 0 : hidden; }
  size_t mlp_width() const { return routing.mlp_cols.empty() ? 0 : hidden; }
  size_t fused_width() const { return graph_width() + mlp_width(); }
};

// Hidden weights get Glorot-uniform init; the classifier starts at zero
// so an untrained model predicts the uniform distribution exactly.
GsiModel init_model(const GsiConfig& config, FeatureRouting routing, Rng& rng);

// Gradients mirror the model tensor for tensor.
struct GsiGradients {
  std::array<RgcnLayerWeights, 2> rgcn;
  Matrix mlp_w1, mlp_w2;
  std::vector<double> mlp_b1, mlp_b2;
  Matrix clf_w;
  std::vector<double> clf_b;
};

// Single graph-convolution layer: act( sum_zeta A_zeta H W_zeta + H W_0 ).
Matrix rgcn_layer(const RelationAdjacency& adj, const Matrix& features,
                  const RgcnLayerWeights& weights, bool relu);

struct ForwardCache {
  Matrix logits;  // users x kNumClasses
  Matrix fused;   // Z = [Z_G || Z_notG], user rows
  // Intermediates for backprop.
  Matrix xg, p1, h1, p2, h2;
  Matrix xn_users, m1, a1;
};

ForwardCache forward(const GsiModel& model, const RelationAdjacency& adj, const Matrix& features,
                     size_t user_count);

// Mean cross-entropy of the gold class under softmax(logits).
double ce_loss(const Matrix& logits, const std::vector<size_t>& rows,
               const std::vector<StanceLabel>& labels, const std::vector<double>& weights = {});

GsiGradients gradients(const GsiModel& model, const RelationAdjacency& adj, const Matrix& features,
                       size_t user_count, const std::vector<size_t>& rows,
                       const std::vector<StanceLabel>& labels,
                       const std::vector<double>& weights = {}, const ForwardCache* cache = nullptr);

struct EpochLog {
  size_t epoch = 0;
  double train_loss = 0.0;
  double val_f_avg = 0.0;
};

struct TrainResult {
  GsiModel model;
  std::vector<EpochLog> log;
  size_t best_epoch = 0;
  double best_val_f_avg = 0.0;
};

TrainResult train(const GsiConfig& config, const SocialGraph& graph, const Matrix& features,
                  const FmiRanking& ranking, const FeatureRouting& routing,
                  const DatasetSplit& split);

std::vector<StanceLabel> predict(const GsiModel& model, const SocialGraph& graph,
                                 const Matrix& features, const std::vector<std::string>& user_ids);

// Argmax with deterministic tie-break: Against, then Favor, then None.
StanceLabel argmax_label(const double* logits);

void save_checkpoint(const GsiModel& model, const GsiConfig& config, const std::string& path);
struct Checkpoint {
  GsiModel model;
  GsiConfig config;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mrfg
