#pragma once
// Pluggable text embedders. The hashing embedder is a seeded feature
// hasher with mean pooling and L2 normalization; the external embedder
// looks vectors up from a precomputed table keyed by node id.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mrfg/core.hpp"
#include "mrfg/graph.hpp"
#include "mrfg/matrix.hpp"

namespace mrfg {

enum class EmbedderKind { Hashing, External };

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::Hashing;
  size_t dim = 256;
  uint64_t seed = 0;          // hashing only
  std::string path;           // external only

  void validate() const {
    if (dim < 8) throw Error("embedder dim must be >= 8");
    if (kind == EmbedderKind::External && path.empty())
      throw Error("external embedder needs a table path");
  }
};

struct EmbedResult {
  std::vector<double> vec;
  bool degenerate = false;  // no usable tokens; vec is all zeros
};

struct FeatureMatrix {
  Matrix values;                    // node order matches SocialGraph indexing
  std::vector<uint8_t> degenerate;  // per row
};

// Precomputed vectors, one JSONL record {"node_id", "vector": [...]} per line.
class EmbeddingTable {
 public:
  static EmbeddingTable load(const std::string& path, size_t expected_dim);

  const std::vector<double>& lookup(const std::string& node_id) const;
  bool contains(const std::string& node_id) const { return table_.count(node_id) > 0; }
  void insert(const std::string& node_id, std::vector<double> vec);
  size_t dim() const { return dim_; }

  void save(const std::string& path) const;

 private:
  std::unordered_map<std::string, std::vector<double>> table_;
  std::vector<std::string> order_;  // insertion order, for stable files
  size_t dim_ = 0;
};

// Lowercased split on anything that is not alphanumeric; bytes >= 0x80
// are kept so multi-byte UTF-8 words survive.
std::vector<std::string> tokenize(const std::string& text);

EmbedResult embed_user(const User& u, const std::vector<Tweet>& own_tweets,
                       const EmbedderSpec& spec, const EmbeddingTable* table = nullptr);
EmbedResult embed_tweet(const Tweet& t, const EmbedderSpec& spec,
                        const EmbeddingTable* table = nullptr);

// Row i = embedding of graph node i. The table is required for
// kind=external and ignored otherwise.
FeatureMatrix assemble_feature_matrix(const SocialGraph& graph, const EmbedderSpec& spec,
                                      const EmbeddingTable* table = nullptr);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double l2_norm(const std::vector<double>& v);
// Returns 0 when either vector has zero norm; throws on dim mismatch.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace mrfg
