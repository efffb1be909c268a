#include "mrfg/graph.hpp"

#include <algorithm>
#include <set>

namespace mrfg {

SocialGraph build_graph(const std::vector<User>& users,
                        const std::vector<Tweet>& own_tweets,
                        const std::map<std::string, std::vector<Tweet>>& retained_followee_tweets) {
  if (users.empty()) throw Error("no users");

  SocialGraph g;
  g.users = users;
  std::sort(g.users.begin(), g.users.end(),
            [](const User& a, const User& b) { return a.id < b.id; });

  for (size_t i = 0; i < g.users.size(); ++i) {
    auto [it, inserted] = g.user_index.emplace(g.users[i].id, i);
    if (!inserted) throw Error("duplicate user " + g.users[i].id);
  }

  std::unordered_map<std::string, const Tweet*> tweet_by_id;
  for (const auto& t : own_tweets) tweet_by_id.emplace(t.id, &t);

  // Gather attachments, then sort into the canonical node order.
  std::vector<TweetNode> attachments;
  std::set<std::pair<std::string, std::string>> seen;  // (user id, tweet id)

  auto attach = [&](const std::string& user_id, const Tweet& t, RelationKind rel) {
    if (!seen.emplace(user_id, t.id).second)
      throw Error("duplicate tweet node for (" + t.id + ", " + user_id + ")");
    TweetNode node;
    node.tweet_id = t.id;
    node.author_id = t.author_id;
    node.text = t.text;
    node.user_node = g.node_of_user(user_id);
    node.relation = rel;
    attachments.push_back(std::move(node));
  };

  for (const auto& u : g.users) {
    for (const auto& tid : u.tweet_ids) {
      auto it = tweet_by_id.find(tid);
      if (it == tweet_by_id.end()) throw Error("dangling tweet " + tid);
      attach(u.id, *it->second, RelationKind::OwnTweetToUser);
    }
  }
  for (const auto& [user_id, tweets] : retained_followee_tweets) {
    if (!g.user_index.count(user_id)) throw Error("dangling user " + user_id);
    for (const auto& t : tweets) attach(user_id, t, RelationKind::FolloweeTweetToUser);
  }

  std::sort(attachments.begin(), attachments.end(),
            [&](const TweetNode& a, const TweetNode& b) {
              const std::string& ua = g.users[a.user_node].id;
              const std::string& ub = g.users[b.user_node].id;
              return ua != ub ? ua < ub : a.tweet_id < b.tweet_id;
            });
  g.tweets = std::move(attachments);

  for (size_t j = 0; j < g.tweets.size(); ++j)
    g.edges.push_back({g.user_count() + j, g.tweets[j].user_node, g.tweets[j].relation});
  for (size_t i = 0; i < g.user_count(); ++i)
    g.edges.push_back({i, i, RelationKind::SelfLoop});

  return g;
}

}  // namespace mrfg
