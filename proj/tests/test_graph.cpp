#include <algorithm>

#include "doctest.h"
#include "mrfg/graph.hpp"
#include "mrfg/rng.hpp"

using namespace mrfg;

namespace {

User make_user(const std::string& id, std::vector<std::string> tweet_ids = {},
               std::vector<std::string> followee_ids = {}) {
  User u;
  u.id = id;
  u.target = TargetId("t");
  u.tweet_ids = std::move(tweet_ids);
  u.followee_ids = std::move(followee_ids);
  return u;
}

}  // namespace

TEST_CASE("minimal graph: one user, no tweets") {
  SocialGraph g = build_graph({make_user("u1")}, {}, {});
  CHECK(g.user_count() == 1);
  CHECK(g.tweets.empty());
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].kind == RelationKind::SelfLoop);
  CHECK(g.edges[0].src == 0);
  CHECK(g.edges[0].dst == 0);
}

TEST_CASE("shared followee tweet becomes two nodes") {
  std::vector<User> users{make_user("u1", {"t1"}), make_user("u2", {}, {"u1"})};
  std::vector<Tweet> tweets{{"t1", "u1", "hello"}};
  std::map<std::string, std::vector<Tweet>> retained{{"u2", {tweets[0]}}};

  SocialGraph g = build_graph(users, tweets, retained);
  CHECK(g.user_count() == 2);
  REQUIRE(g.tweets.size() == 2);  // t1 attached to u1 (own) and to u2 (followee)
  CHECK(g.edges.size() == 4);     // 1 own + 1 retained + 2 self-loops

  size_t own_edges = 0, followee_edges = 0, self_loops = 0;
  for (const auto& e : g.edges) {
    if (e.kind == RelationKind::OwnTweetToUser) {
      ++own_edges;
      CHECK(g.users[e.dst].id == "u1");
    } else if (e.kind == RelationKind::FolloweeTweetToUser) {
      ++followee_edges;
      CHECK(g.users[e.dst].id == "u2");
    } else {
      ++self_loops;
      CHECK(e.src == e.dst);
    }
  }
  CHECK(own_edges == 1);
  CHECK(followee_edges == 1);
  CHECK(self_loops == 2);
}

TEST_CASE("dangling tweet reference is an error naming the id") {
  std::vector<User> users{make_user("u1", {"tX"})};
  CHECK_THROWS_WITH_AS(build_graph(users, {}, {}), doctest::Contains("dangling tweet tX"),
                       Error);
}

TEST_CASE("duplicate (tweet, user) attachment is an error") {
  std::vector<User> users{make_user("u1", {"t1"}), make_user("u2", {}, {"u1"})};
  std::vector<Tweet> tweets{{"t1", "u1", "x"}};
  // t1 retained twice for the same follower.
  std::map<std::string, std::vector<Tweet>> retained{{"u2", {tweets[0], tweets[0]}}};
  CHECK_THROWS_WITH_AS(build_graph(users, tweets, retained),
                       doctest::Contains("duplicate tweet node"), Error);
}

TEST_CASE("retained tweets for an unknown user are an error") {
  std::map<std::string, std::vector<Tweet>> retained{{"uZ", {Tweet{"t1", "u1", "x"}}}};
  CHECK_THROWS_WITH_AS(build_graph({make_user("u1", {"t1"})}, {Tweet{"t1", "u1", "x"}}, retained),
                       doctest::Contains("dangling user uZ"), Error);
}

TEST_CASE("node ordering is canonical regardless of input order") {
  std::vector<Tweet> tweets{{"t1", "u2", "a"}, {"t2", "u1", "b"}};
  std::vector<User> fwd{make_user("u1", {"t2"}), make_user("u2", {"t1"})};
  std::vector<User> rev{fwd[1], fwd[0]};

  SocialGraph a = build_graph(fwd, tweets, {});
  SocialGraph b = build_graph(rev, tweets, {});
  REQUIRE(a.user_count() == b.user_count());
  for (size_t i = 0; i < a.user_count(); ++i) CHECK(a.users[i].id == b.users[i].id);
  REQUIRE(a.tweets.size() == b.tweets.size());
  for (size_t i = 0; i < a.tweets.size(); ++i) CHECK(a.tweets[i].tweet_id == b.tweets[i].tweet_id);
  REQUIRE(a.edges.size() == b.edges.size());
  for (size_t i = 0; i < a.edges.size(); ++i) {
    CHECK(a.edges[i].src == b.edges[i].src);
    CHECK(a.edges[i].dst == b.edges[i].dst);
    CHECK(a.edges[i].kind == b.edges[i].kind);
  }
}

TEST_CASE("edge count formula and tweet out-degree on random graphs") {
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const size_t n = 2 + rng.below(8);
    std::vector<User> users;
    std::vector<Tweet> tweets;
    for (size_t i = 0; i < n; ++i) users.push_back(make_user("u" + std::to_string(i)));
    size_t own_total = 0;
    for (size_t i = 0; i < n; ++i) {
      const size_t k = rng.below(4);
      for (size_t j = 0; j < k; ++j) {
        const std::string tid = "t" + std::to_string(i) + "_" + std::to_string(j);
        tweets.push_back({tid, users[i].id, "w"});
        users[i].tweet_ids.push_back(tid);
        ++own_total;
      }
    }
    std::map<std::string, std::vector<Tweet>> retained;
    size_t retained_total = 0;
    for (size_t i = 0; i < n; ++i) {
      std::vector<Tweet> keep;
      for (const auto& t : tweets)
        if (t.author_id != users[i].id && rng.uniform() < 0.2) keep.push_back(t);
      retained_total += keep.size();
      if (!keep.empty()) retained[users[i].id] = std::move(keep);
    }

    SocialGraph g = build_graph(users, tweets, retained);
    CHECK(g.edges.size() == own_total + retained_total + n);
    CHECK(g.node_count() == n + own_total + retained_total);

    // Every tweet node points at exactly one user; users only self-loop.
    std::vector<size_t> outdeg(g.node_count(), 0);
    for (const auto& e : g.edges)
      if (e.kind != RelationKind::SelfLoop) ++outdeg[e.src];
    for (size_t j = 0; j < g.tweets.size(); ++j) CHECK(outdeg[g.user_count() + j] == 1);
    for (size_t i = 0; i < g.user_count(); ++i) {
      CHECK(outdeg[i] == 0);
      CHECK(g.user_index.at(g.users[i].id) == i);
    }
  }
}
