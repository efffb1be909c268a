#pragma once
// Core domain types shared by every stage of the pipeline.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrfg {

// Pipeline errors carry a human-readable message naming the offending
// entity (id, path, line number).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

enum class StanceLabel { Favor, Against, None };

inline const char* to_string(StanceLabel l) {
  switch (l) {
    case StanceLabel::Favor: return "favor";
    case StanceLabel::Against: return "against";
    case StanceLabel::None: return "none";
  }
  return "?";
}

inline StanceLabel stance_from_string(const std::string& s) {
  if (s == "favor") return StanceLabel::Favor;
  if (s == "against") return StanceLabel::Against;
  if (s == "none") return StanceLabel::None;
  throw Error("invalid label \"" + s + "\"");
}

constexpr int kNumClasses = 3;

inline int class_index(StanceLabel l) { return static_cast<int>(l); }
inline StanceLabel label_from_index(int i) {
  if (i < 0 || i >= kNumClasses) throw Error("label index out of range");
  return static_cast<StanceLabel>(i);
}

// Stance target, e.g. "biden" or "trump". Lowercase-normalized, non-empty.
struct TargetId {
  std::string name;

  TargetId() = default;
  explicit TargetId(std::string n) : name(std::move(n)) {
    if (name.empty()) throw Error("empty target name");
    for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  bool operator==(const TargetId& o) const { return name == o.name; }
  bool operator!=(const TargetId& o) const { return name != o.name; }
};

struct Tweet {
  std::string id;
  std::string author_id;
  std::string text;
};

enum class UserRole { Followee, Follower, Isolated };

inline const char* to_string(UserRole r) {
  switch (r) {
    case UserRole::Followee: return "followee";
    case UserRole::Follower: return "follower";
    case UserRole::Isolated: return "isolated";
  }
  return "?";
}

struct User {
  std::string id;
  std::string description;
  std::vector<std::string> tweet_ids;     // own tweets, stored order
  std::vector<std::string> followee_ids;  // users this one follows, stored order
  UserRole role = UserRole::Isolated;
  std::optional<StanceLabel> label;
  TargetId target;
};

enum class RelationKind { OwnTweetToUser, FolloweeTweetToUser, SelfLoop };

constexpr int kNumRelations = 3;

inline const char* to_string(RelationKind r) {
  switch (r) {
    case RelationKind::OwnTweetToUser: return "own_tweet_to_user";
    case RelationKind::FolloweeTweetToUser: return "followee_tweet_to_user";
    case RelationKind::SelfLoop: return "self_loop";
  }
  return "?";
}

}  // namespace mrfg
