#pragma once
// Directed heterogeneous graph over user and tweet nodes. Tweet nodes
// point at the user they inform (their author for own tweets, the
// follower for retained followee tweets) and every user carries a
// self-loop. A followee tweet retained for k followers becomes k
// distinct tweet nodes, one per attachment.

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "mrfg/core.hpp"

namespace mrfg {

// One attachment of a tweet to a user. Node index = user_count + position.
struct TweetNode {
  std::string tweet_id;
  std::string author_id;
  std::string text;
  size_t user_node = 0;  // attachment target
  RelationKind relation = RelationKind::OwnTweetToUser;
};

struct GraphEdge {
  size_t src = 0;
  size_t dst = 0;
  RelationKind kind = RelationKind::SelfLoop;
};

struct SocialGraph {
  std::vector<User> users;        // node i, users sorted by id
  std::vector<TweetNode> tweets;  // node user_count()+j, sorted by (user id, tweet id)
  std::vector<GraphEdge> edges;
  std::unordered_map<std::string, size_t> user_index;  // user id -> node index

  size_t user_count() const { return users.size(); }
  size_t node_count() const { return users.size() + tweets.size(); }
  bool is_user_node(size_t i) const { return i < users.size(); }

  size_t node_of_user(const std::string& id) const {
    auto it = user_index.find(id);
    if (it == user_index.end()) throw Error("unknown user " + id);
    return it->second;
  }
};

// retained_followee_tweets: follower user id -> tweets kept by the
// relevance filter, in filter output order.
SocialGraph build_graph(const std::vector<User>& users,
                        const std::vector<Tweet>& own_tweets,
                        const std::map<std::string, std::vector<Tweet>>& retained_followee_tweets);

}  // namespace mrfg
