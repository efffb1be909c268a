#include "mrfg/gsi.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mrfg/metrics.hpp"

namespace mrfg {

RelationAdjacency build_relation_adjacency(const SocialGraph& graph) {
  RelationAdjacency adj;
  adj.n = graph.node_count();
  for (int rel = 0; rel < kNumRelations; ++rel) {
    std::vector<std::vector<size_t>> in_edges(adj.n);
    for (const auto& e : graph.edges)
      if (static_cast<int>(e.kind) == rel) in_edges[e.dst].push_back(e.src);

    auto& rp = adj.row_ptr[rel];
    rp.assign(adj.n + 1, 0);
    for (size_t i = 0; i < adj.n; ++i) rp[i + 1] = rp[i] + in_edges[i].size();
    adj.col_idx[rel].reserve(rp[adj.n]);
    adj.values[rel].reserve(rp[adj.n]);
    for (size_t i = 0; i < adj.n; ++i) {
      auto& srcs = in_edges[i];
      std::sort(srcs.begin(), srcs.end());
      const double w = srcs.empty() ? 0.0 : 1.0 / static_cast<double>(srcs.size());
      for (size_t s : srcs) {
        adj.col_idx[rel].push_back(s);
        adj.values[rel].push_back(w);
      }
    }
  }
  return adj;
}

namespace {

// out = A_rel * M
Matrix spmm(const RelationAdjacency& adj, int rel, const Matrix& m) {
  Matrix out(adj.n, m.cols());
  const auto& rp = adj.row_ptr[rel];
  for (size_t i = 0; i < adj.n; ++i) {
    double* dst = out.row_ptr(i);
    for (size_t e = rp[i]; e < rp[i + 1]; ++e) {
      const double w = adj.values[rel][e];
      const double* src = m.row_ptr(adj.col_idx[rel][e]);
      for (size_t c = 0; c < m.cols(); ++c) dst[c] += w * src[c];
    }
  }
  return out;
}

// out = A_rel^T * M
Matrix spmm_transpose(const RelationAdjacency& adj, int rel, const Matrix& m) {
  Matrix out(adj.n, m.cols());
  const auto& rp = adj.row_ptr[rel];
  for (size_t i = 0; i < adj.n; ++i) {
    const double* src = m.row_ptr(i);
    for (size_t e = rp[i]; e < rp[i + 1]; ++e) {
      const double w = adj.values[rel][e];
      double* dst = out.row_ptr(adj.col_idx[rel][e]);
      for (size_t c = 0; c < m.cols(); ++c) dst[c] += w * src[c];
    }
  }
  return out;
}

Matrix relu(const Matrix& m) {
  Matrix out = m;
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

void relu_backward_inplace(Matrix& grad, const Matrix& preact) {
  for (size_t i = 0; i < grad.data().size(); ++i)
    if (preact.data()[i] <= 0.0) grad.data()[i] = 0.0;
}

Matrix glorot(size_t rows, size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (auto& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

Matrix rgcn_preact(const RelationAdjacency& adj, const Matrix& features,
                   const RgcnLayerWeights& weights) {
  Matrix pre(adj.n, weights.self.cols());
  for (int rel = 0; rel < kNumRelations; ++rel) {
    if (adj.col_idx[rel].empty()) continue;
    pre.add_inplace(spmm(adj, rel, features.matmul(weights.relation[rel])));
  }
  pre.add_inplace(features.matmul(weights.self));
  return pre;
}

void add_row_vector(Matrix& m, const std::vector<double>& b) {
  for (size_t i = 0; i < m.rows(); ++i) {
    double* row = m.row_ptr(i);
    for (size_t j = 0; j < m.cols(); ++j) row[j] += b[j];
  }
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> s(m.cols(), 0.0);
  for (size_t i = 0; i < m.rows(); ++i) {
    const double* row = m.row_ptr(i);
    for (size_t j = 0; j < m.cols(); ++j) s[j] += row[j];
  }
  return s;
}

std::vector<size_t> user_row_indices(size_t user_count) {
  std::vector<size_t> rows(user_count);
  for (size_t i = 0; i < user_count; ++i) rows[i] = i;
  return rows;
}

void softmax_row(const double* logits, double* probs) {
  double mx = logits[0];
  for (int c = 1; c < kNumClasses; ++c) mx = std::max(mx, logits[c]);
  double sum = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    probs[c] = std::exp(logits[c] - mx);
    sum += probs[c];
  }
  for (int c = 0; c < kNumClasses; ++c) probs[c] /= sum;
}

}  // namespace

GsiModel init_model(const GsiConfig& config, FeatureRouting routing, Rng& rng) {
  config.validate();
  if (routing.graph_cols.empty() && routing.mlp_cols.empty())
    throw Error("feature routing leaves both paths empty");

  GsiModel model;
  model.routing = std::move(routing);
  model.hidden = config.hidden_dim;
  model.relu_last_rgcn_layer = config.relu_last_rgcn_layer;

  const size_t kg = model.routing.graph_cols.size();
  if (kg > 0) {
    for (size_t l = 0; l < 2; ++l) {
      const size_t in = l == 0 ? kg : model.hidden;
      for (int rel = 0; rel < kNumRelations; ++rel)
        model.rgcn[l].relation[rel] = glorot(in, model.hidden, rng);
      model.rgcn[l].self = glorot(in, model.hidden, rng);
    }
  }
  const size_t km = model.routing.mlp_cols.size();
  if (km > 0) {
    model.mlp_w1 = glorot(km, model.hidden, rng);
    model.mlp_b1.assign(model.hidden, 0.0);
    model.mlp_w2 = glorot(model.hidden, model.hidden, rng);
    model.mlp_b2.assign(model.hidden, 0.0);
  }
  model.clf_w = Matrix(model.fused_width(), kNumClasses, 0.0);
  model.clf_b.assign(kNumClasses, 0.0);
  return model;
}

Matrix rgcn_layer(const RelationAdjacency& adj, const Matrix& features,
                  const RgcnLayerWeights& weights, bool apply_relu) {
  Matrix pre = rgcn_preact(adj, features, weights);
  return apply_relu ? relu(pre) : pre;
}

ForwardCache forward(const GsiModel& model, const RelationAdjacency& adj, const Matrix& features,
                     size_t user_count) {
  if (features.rows() != adj.n) throw Error("forward: feature rows != node count");
  ForwardCache cache;
  const size_t gw = model.graph_width();
  const size_t mw = model.mlp_width();

  if (gw > 0) {
    cache.xg = features.select_columns(model.routing.graph_cols);
    cache.p1 = rgcn_preact(adj, cache.xg, model.rgcn[0]);
    cache.h1 = relu(cache.p1);
    cache.p2 = rgcn_preact(adj, cache.h1, model.rgcn[1]);
    cache.h2 = model.relu_last_rgcn_layer ? relu(cache.p2) : cache.p2;
  }
  if (mw > 0) {
    cache.xn_users = features.select_columns(model.routing.mlp_cols)
                         .select_rows(user_row_indices(user_count));
    cache.m1 = cache.xn_users.matmul(model.mlp_w1);
    add_row_vector(cache.m1, model.mlp_b1);
    cache.a1 = relu(cache.m1);
    Matrix m2 = cache.a1.matmul(model.mlp_w2);
    add_row_vector(m2, model.mlp_b2);

    cache.fused = Matrix(user_count, gw + mw);
    for (size_t i = 0; i < user_count; ++i) {
      double* dst = cache.fused.row_ptr(i);
      if (gw > 0) {
        const double* zg = cache.h2.row_ptr(i);
        for (size_t j = 0; j < gw; ++j) dst[j] = zg[j];
      }
      const double* zn = m2.row_ptr(i);
      for (size_t j = 0; j < mw; ++j) dst[gw + j] = zn[j];
    }
  } else {
    cache.fused = cache.h2.select_rows(user_row_indices(user_count));
  }

  cache.logits = cache.fused.matmul(model.clf_w);
  add_row_vector(cache.logits, model.clf_b);
  return cache;
}

double ce_loss(const Matrix& logits, const std::vector<size_t>& rows,
               const std::vector<StanceLabel>& labels, const std::vector<double>& weights) {
  if (rows.size() != labels.size()) throw Error("loss: rows/labels mismatch");
  if (rows.empty()) throw Error("loss: nothing to score");
  double total = 0.0, wsum = 0.0;
  for (size_t i = 0; i < rows.size(); ++i) {
    const double* l = logits.row_ptr(rows[i]);
    double mx = std::max({l[0], l[1], l[2]});
    double lse = 0.0;
    for (int c = 0; c < kNumClasses; ++c) lse += std::exp(l[c] - mx);
    lse = std::log(lse) + mx;
    const double w = weights.empty() ? 1.0 : weights[i];
    total += w * (lse - l[class_index(labels[i])]);
    wsum += w;
  }
  return total / wsum;
}

GsiGradients gradients(const GsiModel& model, const RelationAdjacency& adj,
                       const Matrix& features, size_t user_count,
                       const std::vector<size_t>& rows, const std::vector<StanceLabel>& labels,
                       const std::vector<double>& weights, const ForwardCache* cache_in) {
  ForwardCache local;
  if (!cache_in) {
    local = forward(model, adj, features, user_count);
    cache_in = &local;
  }
  const ForwardCache& cache = *cache_in;
  const size_t gw = model.graph_width();
  const size_t mw = model.mlp_width();

  double wsum = 0.0;
  for (size_t i = 0; i < rows.size(); ++i) wsum += weights.empty() ? 1.0 : weights[i];

  Matrix dlogits(user_count, kNumClasses);
  for (size_t i = 0; i < rows.size(); ++i) {
    const double w = (weights.empty() ? 1.0 : weights[i]) / wsum;
    double probs[kNumClasses];
    softmax_row(cache.logits.row_ptr(rows[i]), probs);
    double* d = dlogits.row_ptr(rows[i]);
    for (int c = 0; c < kNumClasses; ++c) d[c] += w * probs[c];
    d[class_index(labels[i])] -= w;
  }

  GsiGradients g;
  g.clf_w = cache.fused.transpose_matmul(dlogits);
  g.clf_b = column_sums(dlogits);
  Matrix dfused = dlogits.matmul_transpose(model.clf_w);

  if (mw > 0) {
    Matrix dm2(user_count, mw);
    for (size_t i = 0; i < user_count; ++i) {
      const double* src = dfused.row_ptr(i);
      double* dst = dm2.row_ptr(i);
      for (size_t j = 0; j < mw; ++j) dst[j] = src[gw + j];
    }
    g.mlp_w2 = cache.a1.transpose_matmul(dm2);
    g.mlp_b2 = column_sums(dm2);
    Matrix dm1 = dm2.matmul_transpose(model.mlp_w2);
    relu_backward_inplace(dm1, cache.m1);
    g.mlp_w1 = cache.xn_users.transpose_matmul(dm1);
    g.mlp_b1 = column_sums(dm1);
  }

  if (gw > 0) {
    Matrix dh2(adj.n, gw);
    for (size_t i = 0; i < user_count; ++i) {
      const double* src = dfused.row_ptr(i);
      double* dst = dh2.row_ptr(i);
      for (size_t j = 0; j < gw; ++j) dst[j] = src[j];
    }
    Matrix dp2 = std::move(dh2);
    if (model.relu_last_rgcn_layer) relu_backward_inplace(dp2, cache.p2);

    // Layer 1 backward.
    Matrix dh1(adj.n, model.hidden);
    for (int rel = 0; rel < kNumRelations; ++rel) {
      Matrix b = spmm_transpose(adj, rel, dp2);
      g.rgcn[1].relation[rel] = cache.h1.transpose_matmul(b);
      dh1.add_inplace(b.matmul_transpose(model.rgcn[1].relation[rel]));
    }
    g.rgcn[1].self = cache.h1.transpose_matmul(dp2);
    dh1.add_inplace(dp2.matmul_transpose(model.rgcn[1].self));

    Matrix dp1 = std::move(dh1);
    relu_backward_inplace(dp1, cache.p1);

    // Layer 0 backward; input features need no gradient.
    for (int rel = 0; rel < kNumRelations; ++rel) {
      Matrix b = spmm_transpose(adj, rel, dp1);
      g.rgcn[0].relation[rel] = cache.xg.transpose_matmul(b);
    }
    g.rgcn[0].self = cache.xg.transpose_matmul(dp1);
  }
  return g;
}

namespace {

struct TensorRef {
  double* data;
  size_t len;
};

void collect(std::vector<TensorRef>& out, Matrix& m) {
  if (!m.data().empty()) out.push_back({m.data().data(), m.data().size()});
}
void collect(std::vector<TensorRef>& out, std::vector<double>& v) {
  if (!v.empty()) out.push_back({v.data(), v.size()});
}

template <typename M>
std::vector<TensorRef> tensor_refs(M& m) {
  std::vector<TensorRef> refs;
  for (size_t l = 0; l < 2; ++l) {
    for (int rel = 0; rel < kNumRelations; ++rel) collect(refs, m.rgcn[l].relation[rel]);
    collect(refs, m.rgcn[l].self);
  }
  collect(refs, m.mlp_w1);
  collect(refs, m.mlp_b1);
  collect(refs, m.mlp_w2);
  collect(refs, m.mlp_b2);
  collect(refs, m.clf_w);
  collect(refs, m.clf_b);
  return refs;
}

class Adam {
 public:
  Adam(double lr, const std::vector<TensorRef>& params) : lr_(lr) {
    for (const auto& p : params) {
      m_.emplace_back(p.len, 0.0);
      v_.emplace_back(p.len, 0.0);
    }
  }

  void step(const std::vector<TensorRef>& params, const std::vector<TensorRef>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
      double* p = params[i].data;
      const double* g = grads[i].data;
      auto& m = m_[i];
      auto& v = v_[i];
      for (size_t j = 0; j < params[i].len; ++j) {
        m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g[j];
        v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g[j] * g[j];
        p[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + kEps);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace

TrainResult train(const GsiConfig& config, const SocialGraph& graph, const Matrix& features,
                  const FmiRanking& ranking, const FeatureRouting& routing,
                  const DatasetSplit& split) {
  config.validate();
  if (ranking.computed_on != "train")
    throw Error("ranking was computed on \"" + ranking.computed_on + "\", expected train split");

  auto resolve = [&](const std::vector<std::string>& ids) {
    std::vector<size_t> rows;
    std::vector<StanceLabel> labels;
    for (const auto& id : ids) {
      const size_t node = graph.node_of_user(id);
      const auto& label = graph.users[node].label;
      if (!label) throw Error("user " + id + " has no label");
      rows.push_back(node);
      labels.push_back(*label);
    }
    return std::make_pair(rows, labels);
  };
  auto [train_rows, train_labels] = resolve(split.train);
  auto [val_rows, val_labels] = resolve(split.val);
  if (train_rows.empty()) throw Error("empty training split");
  if (val_rows.empty()) throw Error("empty validation split");

  std::vector<double> weights;
  if (config.class_weighting) {
    std::array<double, kNumClasses> counts{};
    for (auto l : train_labels) counts[class_index(l)] += 1.0;
    weights.reserve(train_labels.size());
    for (auto l : train_labels) {
      const double c = counts[class_index(l)];
      weights.push_back(c > 0.0 ? static_cast<double>(train_labels.size()) / (kNumClasses * c)
                                : 0.0);
    }
  }

  RelationAdjacency adj = build_relation_adjacency(graph);
  Rng rng(config.seed);
  TrainResult result;
  result.model = init_model(config, routing, rng);

  auto params = tensor_refs(result.model);
  Adam adam(config.learning_rate, params);

  GsiModel best = result.model;
  double best_val = -1.0;
  size_t best_epoch = 0;
  size_t since_best = 0;

  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    ForwardCache cache = forward(result.model, adj, features, graph.user_count());
    const double loss = ce_loss(cache.logits, train_rows, train_labels, weights);
    if (!std::isfinite(loss))
      throw Error("non-finite loss at epoch " + std::to_string(epoch));
    GsiGradients grads =
        gradients(result.model, adj, features, graph.user_count(), train_rows, train_labels,
                  weights, &cache);
    auto grad_refs = tensor_refs(grads);
    adam.step(params, grad_refs);

    ForwardCache eval = forward(result.model, adj, features, graph.user_count());
    std::vector<StanceLabel> val_pred;
    val_pred.reserve(val_rows.size());
    for (size_t row : val_rows) val_pred.push_back(argmax_label(eval.logits.row_ptr(row)));
    const double val_f_avg = compute_metrics(val_labels, val_pred).f_avg;

    result.log.push_back({epoch, loss, val_f_avg});
    if (val_f_avg > best_val) {
      best_val = val_f_avg;
      best = result.model;
      best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  result.model = std::move(best);
  result.best_epoch = best_epoch;
  result.best_val_f_avg = best_val;
  return result;
}

StanceLabel argmax_label(const double* logits) {
  int best = class_index(StanceLabel::Against);
  if (logits[class_index(StanceLabel::Favor)] > logits[best]) best = class_index(StanceLabel::Favor);
  if (logits[class_index(StanceLabel::None)] > logits[best]) best = class_index(StanceLabel::None);
  return label_from_index(best);
}

std::vector<StanceLabel> predict(const GsiModel& model, const SocialGraph& graph,
                                 const Matrix& features,
                                 const std::vector<std::string>& user_ids) {
  RelationAdjacency adj = build_relation_adjacency(graph);
  ForwardCache cache = forward(model, adj, features, graph.user_count());
  std::vector<StanceLabel> out;
  out.reserve(user_ids.size());
  for (const auto& id : user_ids)
    out.push_back(argmax_label(cache.logits.row_ptr(graph.node_of_user(id))));
  return out;
}

namespace {

constexpr char kCheckpointMagic[8] = {'M', 'R', 'F', 'G', 'G', 'S', 'I', '1'};

void write_u64(std::ostream& out, uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void write_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }
uint64_t read_u64(std::istream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  write_u64(out, m.rows());
  write_u64(out, m.cols());
  out.write(reinterpret_cast<const char*>(m.data().data()),
            static_cast<std::streamsize>(m.data().size() * sizeof(double)));
}

Matrix read_matrix(std::istream& in) {
  const size_t rows = read_u64(in);
  const size_t cols = read_u64(in);
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data().data()),
          static_cast<std::streamsize>(rows * cols * sizeof(double)));
  return m;
}

void write_vec(std::ostream& out, const std::vector<double>& v) {
  write_u64(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_vec(std::istream& in) {
  std::vector<double> v(read_u64(in));
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  return v;
}

void write_indices(std::ostream& out, const std::vector<size_t>& v) {
  write_u64(out, v.size());
  for (size_t x : v) write_u64(out, x);
}

std::vector<size_t> read_indices(std::istream& in) {
  std::vector<size_t> v(read_u64(in));
  for (auto& x : v) x = read_u64(in);
  return v;
}

}  // namespace

void save_checkpoint(const GsiModel& model, const GsiConfig& config, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path);
  out.write(kCheckpointMagic, 8);
  write_u64(out, 1);  // version
  write_f64(out, config.r);
  write_u64(out, config.hidden_dim);
  write_f64(out, config.learning_rate);
  write_u64(out, config.epochs);
  write_u64(out, config.patience);
  write_u64(out, config.seed);
  write_u64(out, config.relu_last_rgcn_layer ? 1 : 0);
  write_u64(out, config.class_weighting ? 1 : 0);
  write_indices(out, model.routing.graph_cols);
  write_indices(out, model.routing.mlp_cols);
  for (size_t l = 0; l < 2; ++l) {
    for (int rel = 0; rel < kNumRelations; ++rel) write_matrix(out, model.rgcn[l].relation[rel]);
    write_matrix(out, model.rgcn[l].self);
  }
  write_matrix(out, model.mlp_w1);
  write_vec(out, model.mlp_b1);
  write_matrix(out, model.mlp_w2);
  write_vec(out, model.mlp_b2);
  write_matrix(out, model.clf_w);
  write_vec(out, model.clf_b);
  if (!out) throw Error("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw Error("not a checkpoint file: " + path);
  if (read_u64(in) != 1) throw Error("unsupported checkpoint version in " + path);

  Checkpoint ckpt;
  ckpt.config.r = read_f64(in);
  ckpt.config.hidden_dim = read_u64(in);
  ckpt.config.learning_rate = read_f64(in);
  ckpt.config.epochs = read_u64(in);
  ckpt.config.patience = read_u64(in);
  ckpt.config.seed = read_u64(in);
  ckpt.config.relu_last_rgcn_layer = read_u64(in) != 0;
  ckpt.config.class_weighting = read_u64(in) != 0;
  ckpt.model.routing.graph_cols = read_indices(in);
  ckpt.model.routing.mlp_cols = read_indices(in);
  ckpt.model.hidden = ckpt.config.hidden_dim;
  ckpt.model.relu_last_rgcn_layer = ckpt.config.relu_last_rgcn_layer;
  for (size_t l = 0; l < 2; ++l) {
    for (int rel = 0; rel < kNumRelations; ++rel)
      ckpt.model.rgcn[l].relation[rel] = read_matrix(in);
    ckpt.model.rgcn[l].self = read_matrix(in);
  }
  ckpt.model.mlp_w1 = read_matrix(in);
  ckpt.model.mlp_b1 = read_vec(in);
  ckpt.model.mlp_w2 = read_matrix(in);
  ckpt.model.mlp_b2 = read_vec(in);
  ckpt.model.clf_w = read_matrix(in);
  ckpt.model.clf_b = read_vec(in);
  if (!in) throw Error("truncated checkpoint " + path);
  return ckpt;
}

}  // namespace mrfg
