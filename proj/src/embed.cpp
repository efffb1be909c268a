#include "mrfg/embed.hpp"

#include <cctype>
#include <cmath>

#include "mrfg/jsonl.hpp"
#include "mrfg/rng.hpp"

namespace mrfg {

namespace {

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void hash_tokens_into(const std::vector<std::string>& tokens, size_t dim, uint64_t seed,
                      std::vector<double>& out) {
  for (const auto& tok : tokens) {
    uint64_t state = fnv1a64(tok) ^ (seed * 0x9e3779b97f4a7c15ULL);
    uint64_t h = splitmix64(state);
    size_t bucket = static_cast<size_t>(h % dim);
    double sign = (h >> 63) ? -1.0 : 1.0;
    out[bucket] += sign;
  }
}

EmbedResult finish_hashed(std::vector<double> acc, size_t token_count) {
  EmbedResult r;
  for (auto& v : acc) v /= static_cast<double>(token_count);
  double n = l2_norm(acc);
  if (n == 0.0) {
    r.vec.assign(acc.size(), 0.0);
    r.degenerate = true;
    return r;
  }
  for (auto& v : acc) v /= n;
  r.vec = std::move(acc);
  return r;
}

EmbedResult degenerate_zero(size_t dim) {
  EmbedResult r;
  r.vec.assign(dim, 0.0);
  r.degenerate = true;
  return r;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    bool keep = std::isalnum(c) || c >= 0x80;
    if (keep) {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

EmbeddingTable EmbeddingTable::load(const std::string& path, size_t expected_dim) {
  EmbeddingTable t;
  t.dim_ = expected_dim;
  for_each_jsonl(path, [&](const Json& rec, size_t lineno) {
    if (!rec.contains("node_id") || !rec.contains("vector"))
      throw Error("malformed embedding record at line " + std::to_string(lineno));
    std::vector<double> vec = rec["vector"].get<std::vector<double>>();
    if (vec.size() != expected_dim)
      throw Error("embedding for " + rec["node_id"].get<std::string>() + " has dim " +
                  std::to_string(vec.size()) + ", expected " + std::to_string(expected_dim));
    for (double v : vec)
      if (!std::isfinite(v))
        throw Error("non-finite embedding value at line " + std::to_string(lineno));
    t.insert(rec["node_id"].get<std::string>(), std::move(vec));
  });
  return t;
}

const std::vector<double>& EmbeddingTable::lookup(const std::string& node_id) const {
  auto it = table_.find(node_id);
  if (it == table_.end()) throw Error("no embedding for node " + node_id);
  return it->second;
}

void EmbeddingTable::insert(const std::string& node_id, std::vector<double> vec) {
  if (dim_ == 0) dim_ = vec.size();
  auto [it, inserted] = table_.emplace(node_id, std::move(vec));
  if (inserted) order_.push_back(node_id);
  else it->second = std::move(vec);
}

void EmbeddingTable::save(const std::string& path) const {
  JsonlWriter out(path);
  for (const auto& id : order_)
    out.write(Json{{"node_id", id}, {"vector", table_.at(id)}});
}

EmbedResult embed_user(const User& u, const std::vector<Tweet>& own_tweets,
                       const EmbedderSpec& spec, const EmbeddingTable* table) {
  spec.validate();
  if (spec.kind == EmbedderKind::External) {
    if (!table) throw Error("external embedder requires a loaded table");
    EmbedResult r;
    r.vec = table->lookup(u.id);
    return r;
  }

  // [CLS] description [SEP] tweet_1 [SEP] ... tweet_n [SEP], but only if
  // the content itself produces at least one token.
  std::vector<std::string> content = tokenize(u.description);
  std::vector<std::vector<std::string>> tweet_tokens;
  for (const auto& t : own_tweets) {
    auto toks = tokenize(t.text);
    if (!toks.empty()) content.insert(content.end(), toks.begin(), toks.end());
    tweet_tokens.push_back(std::move(toks));
  }
  if (content.empty()) return degenerate_zero(spec.dim);

  std::vector<std::string> seq;
  seq.push_back("cls");
  auto desc = tokenize(u.description);
  seq.insert(seq.end(), desc.begin(), desc.end());
  seq.push_back("sep");
  for (const auto& toks : tweet_tokens) {
    seq.insert(seq.end(), toks.begin(), toks.end());
    seq.push_back("sep");
  }

  std::vector<double> acc(spec.dim, 0.0);
  hash_tokens_into(seq, spec.dim, spec.seed, acc);
  return finish_hashed(std::move(acc), seq.size());
}

EmbedResult embed_tweet(const Tweet& t, const EmbedderSpec& spec, const EmbeddingTable* table) {
  spec.validate();
  if (spec.kind == EmbedderKind::External) {
    if (!table) throw Error("external embedder requires a loaded table");
    EmbedResult r;
    r.vec = table->lookup(t.id);
    return r;
  }
  auto toks = tokenize(t.text);
  if (toks.empty()) return degenerate_zero(spec.dim);
  std::vector<double> acc(spec.dim, 0.0);
  hash_tokens_into(toks, spec.dim, spec.seed, acc);
  return finish_hashed(std::move(acc), toks.size());
}

FeatureMatrix assemble_feature_matrix(const SocialGraph& graph, const EmbedderSpec& spec,
                                      const EmbeddingTable* table) {
  spec.validate();
  FeatureMatrix fm;
  fm.values = Matrix(graph.node_count(), spec.dim);
  fm.degenerate.assign(graph.node_count(), 0);

  // Own-tweet texts per user, needed in stored tweet_ids order.
  std::unordered_map<std::string, Tweet> own_texts;
  for (const auto& tn : graph.tweets)
    if (tn.relation == RelationKind::OwnTweetToUser)
      own_texts.emplace(tn.tweet_id, Tweet{tn.tweet_id, tn.author_id, tn.text});

  for (size_t i = 0; i < graph.user_count(); ++i) {
    const User& u = graph.users[i];
    std::vector<Tweet> tweets;
    for (const auto& tid : u.tweet_ids) {
      auto it = own_texts.find(tid);
      if (it == own_texts.end()) throw Error("dangling tweet " + tid);
      tweets.push_back(it->second);
    }
    EmbedResult r = embed_user(u, tweets, spec, table);
    for (size_t j = 0; j < spec.dim; ++j) fm.values(i, j) = r.vec[j];
    fm.degenerate[i] = r.degenerate ? 1 : 0;
  }
  for (size_t j = 0; j < graph.tweets.size(); ++j) {
    const TweetNode& tn = graph.tweets[j];
    EmbedResult r = embed_tweet(Tweet{tn.tweet_id, tn.author_id, tn.text}, spec, table);
    const size_t row = graph.user_count() + j;
    for (size_t k = 0; k < spec.dim; ++k) fm.values(row, k) = r.vec[k];
    fm.degenerate[row] = r.degenerate ? 1 : 0;
  }
  return fm;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error("vector dim mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  const double d = dot(a, b);  // also checks dims
  if (na == 0.0 || nb == 0.0) return 0.0;
  return d / (na * nb);
}

}  // namespace mrfg
