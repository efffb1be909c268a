#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "doctest.h"
#include "mrfg/embed.hpp"
#include "mrfg/graph.hpp"
#include "mrfg/rng.hpp"

using namespace mrfg;

namespace {

EmbedderSpec hashing_spec(size_t dim = 64, uint64_t seed = 1) {
  EmbedderSpec s;
  s.kind = EmbedderKind::Hashing;
  s.dim = dim;
  s.seed = seed;
  return s;
}

User make_user(const std::string& id, const std::string& desc,
               std::vector<std::string> tweet_ids = {}) {
  User u;
  u.id = id;
  u.description = desc;
  u.target = TargetId("t");
  u.tweet_ids = std::move(tweet_ids);
  return u;
}

}  // namespace

TEST_CASE("tokenizer lowercases and splits on punctuation") {
  CHECK(tokenize("Hello, World!") == std::vector<std::string>{"hello", "world"});
  CHECK(tokenize("[CLS]") == std::vector<std::string>{"cls"});
  CHECK(tokenize("a-b_c 42") == std::vector<std::string>{"a", "b", "c", "42"});
  CHECK(tokenize("   ") == std::vector<std::string>{});
}

TEST_CASE("embed_user is deterministic for identical inputs") {
  User u = make_user("u1", "likes politics", {"t1"});
  std::vector<Tweet> tweets{{"t1", "u1", "vote tomorrow"}};
  EmbedResult a = embed_user(u, tweets, hashing_spec());
  EmbedResult b = embed_user(u, tweets, hashing_spec());
  CHECK(a.vec == b.vec);
  CHECK_FALSE(a.degenerate);
}

TEST_CASE("empty description and no tweets yield a degenerate zero vector") {
  User u = make_user("u1", "");
  EmbedResult r = embed_user(u, {}, hashing_spec());
  CHECK(r.degenerate);
  CHECK(l2_norm(r.vec) == 0.0);
  CHECK(r.vec.size() == 64);
}

TEST_CASE("empty tweet text yields a degenerate zero vector") {
  EmbedResult r = embed_tweet({"t1", "u1", ""}, hashing_spec());
  CHECK(r.degenerate);
  CHECK(l2_norm(r.vec) == 0.0);
}

TEST_CASE("same text under two tweet ids embeds identically") {
  EmbedResult a = embed_tweet({"t1", "u1", "same words"}, hashing_spec());
  EmbedResult b = embed_tweet({"t2", "u9", "same words"}, hashing_spec());
  CHECK(a.vec == b.vec);
}

TEST_CASE("mean pooling and normalization cancel token repetition") {
  Tweet once{"t1", "u1", "stance"};
  Tweet five{"t2", "u1", "stance stance stance stance stance"};
  EmbedResult a = embed_tweet(once, hashing_spec());
  EmbedResult b = embed_tweet(five, hashing_spec());
  CHECK(a.vec == b.vec);
}

TEST_CASE("hashing embedder output norm is 0 or 1") {
  Rng rng(3);
  const char* words[] = {"alpha", "beta", "gamma", "delta", "eps", "zeta"};
  for (int trial = 0; trial < 50; ++trial) {
    std::string text;
    const size_t k = rng.below(6);
    for (size_t i = 0; i < k; ++i) text += std::string(words[rng.below(6)]) + " ";
    EmbedResult r = embed_tweet({"t", "u", text}, hashing_spec(32, trial));
    const double n = l2_norm(r.vec);
    if (r.degenerate) CHECK(n == 0.0);
    else CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("embedding ignores tweet ids but tracks text changes") {
  User u = make_user("u1", "desc", {"a"});
  std::vector<Tweet> t1{{"a", "u1", "same words"}};
  std::vector<Tweet> t2{{"zzz", "u1", "same words"}};
  std::vector<Tweet> t3{{"a", "u1", "different words"}};
  CHECK(embed_user(u, t1, hashing_spec()).vec == embed_user(u, t2, hashing_spec()).vec);
  CHECK(embed_user(u, t1, hashing_spec()).vec != embed_user(u, t3, hashing_spec()).vec);
}

TEST_CASE("disjoint vocabularies stay nearly orthogonal at dim 4096") {
  // Threshold frozen after measuring |cos| across these 100 seeds.
  const std::string text_a = "apple banana cherry date elderberry fig grape honeydew";
  const std::string text_b = "wrench hammer pliers chisel spanner drill sander lathe";
  double worst = 0.0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    EmbedResult a = embed_tweet({"t1", "u", text_a}, hashing_spec(4096, seed));
    EmbedResult b = embed_tweet({"t2", "u", text_b}, hashing_spec(4096, seed));
    worst = std::max(worst, std::abs(cosine(a.vec, b.vec)));
  }
  CHECK(worst < 0.2);
}

TEST_CASE("assemble_feature_matrix shape and input-order invariance") {
  std::vector<User> users{make_user("u1", "one", {"t1"}), make_user("u2", "two")};
  std::vector<Tweet> tweets{{"t1", "u1", "text"}};
  SocialGraph g = build_graph(users, tweets, {});
  FeatureMatrix fm = assemble_feature_matrix(g, hashing_spec(8));
  CHECK(fm.values.rows() == 3);  // 2 users + 1 tweet node
  CHECK(fm.values.cols() == 8);
  CHECK(fm.degenerate.size() == 3);

  std::vector<User> perm{users[1], users[0]};
  SocialGraph g2 = build_graph(perm, tweets, {});
  FeatureMatrix fm2 = assemble_feature_matrix(g2, hashing_spec(8));
  CHECK(fm.values == fm2.values);
}

TEST_CASE("external table lookups and missing ids") {
  namespace fs = std::filesystem;
  const std::string path =
      (fs::temp_directory_path() / ("mrfg_embed_" + std::to_string(::getpid()) + ".jsonl"))
          .string();
  {
    std::ofstream out(path);
    out << R"({"node_id":"u1","vector":[1,0,0,0,0,0,0,0]})" << "\n";
    out << R"({"node_id":"t1","vector":[0,1,0,0,0,0,0,0]})" << "\n";
  }
  EmbeddingTable table = EmbeddingTable::load(path, 8);
  CHECK(table.lookup("u1")[0] == 1.0);

  EmbedderSpec spec;
  spec.kind = EmbedderKind::External;
  spec.dim = 8;
  spec.path = path;

  std::vector<User> users{make_user("u1", "x", {"t1"})};
  std::vector<Tweet> tweets{{"t1", "u1", "y"}};
  SocialGraph g = build_graph(users, tweets, {});
  FeatureMatrix fm = assemble_feature_matrix(g, spec, &table);
  CHECK(fm.values(0, 0) == 1.0);
  CHECK(fm.values(1, 1) == 1.0);

  std::vector<User> users2{make_user("u1", "x", {"t1", "t2"})};
  std::vector<Tweet> tweets2{{"t1", "u1", "y"}, {"t2", "u1", "z"}};
  SocialGraph g2 = build_graph(users2, tweets2, {});
  CHECK_THROWS_WITH_AS(assemble_feature_matrix(g2, spec, &table),
                       doctest::Contains("no embedding for node t2"), Error);
  fs::remove(path);
}

TEST_CASE("external table save/load round trip") {
  namespace fs = std::filesystem;
  const std::string path =
      (fs::temp_directory_path() / ("mrfg_embed_rt_" + std::to_string(::getpid()) + ".jsonl"))
          .string();
  EmbeddingTable table;
  table.insert("a", {0.5, -1.25, 3.0});
  table.insert("b", {1e-9, 2e17, -0.125});
  table.save(path);
  EmbeddingTable back = EmbeddingTable::load(path, 3);
  CHECK(back.lookup("a") == table.lookup("a"));
  CHECK(back.lookup("b") == table.lookup("b"));
  fs::remove(path);
}

TEST_CASE("cosine handles zero vectors and dim mismatches") {
  CHECK(cosine({0, 0}, {1, 1}) == 0.0);
  CHECK(cosine({1, 1}, {1, 1}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(cosine({1, 0}, {1, 0, 0}), Error);
}
