#include "mrfg/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "mrfg/jsonl.hpp"
#include "mrfg/rng.hpp"

namespace mrfg {

double percent(size_t count, size_t total) {
  if (total == 0) return 0.0;
  double v = 100.0 * static_cast<double>(count) / static_cast<double>(total);
  return static_cast<double>(std::llround(v * 100.0)) / 100.0;
}

namespace {

std::string require_string(const Json& rec, const char* field, size_t lineno) {
  if (!rec.contains(field) || !rec[field].is_string())
    throw Error("missing field \"" + std::string(field) + "\" at line " + std::to_string(lineno));
  return rec[field].get<std::string>();
}

}  // namespace

Corpus load_corpus(const std::string& users_path, const std::string& tweets_path,
                   const std::string& edges_path) {
  Corpus corpus;
  std::unordered_map<std::string, size_t> user_pos;

  for_each_jsonl(users_path, [&](const Json& rec, size_t lineno) {
    User u;
    u.id = require_string(rec, "id", lineno);
    u.description = rec.value("description", std::string());
    u.target = TargetId(require_string(rec, "target", lineno));
    if (rec.contains("label") && !rec["label"].is_null()) {
      const std::string raw = rec["label"].get<std::string>();
      try {
        u.label = stance_from_string(raw);
      } catch (const Error&) {
        throw Error("invalid label at line " + std::to_string(lineno) + ": \"" + raw + "\"");
      }
    }
    if (rec.contains("followee_ids")) {
      for (const auto& f : rec["followee_ids"]) u.followee_ids.push_back(f.get<std::string>());
    }
    if (!user_pos.emplace(u.id, corpus.users.size()).second)
      throw Error("duplicate user id " + u.id + " at line " + std::to_string(lineno));
    corpus.users.push_back(std::move(u));
  });
  if (corpus.users.empty()) throw Error("no users");

  std::unordered_set<std::string> tweet_ids;
  for_each_jsonl(tweets_path, [&](const Json& rec, size_t lineno) {
    Tweet t;
    t.id = require_string(rec, "id", lineno);
    t.author_id = require_string(rec, "author_id", lineno);
    t.text = rec.value("text", std::string());
    if (!tweet_ids.insert(t.id).second)
      throw Error("duplicate tweet id " + t.id + " at line " + std::to_string(lineno));
    auto it = user_pos.find(t.author_id);
    if (it == user_pos.end())
      throw Error("tweet " + t.id + " references unknown author " + t.author_id);
    corpus.users[it->second].tweet_ids.push_back(t.id);
    corpus.tweets.push_back(std::move(t));
  });

  // Follow structure: users-file followee_ids keep their stored order;
  // edge-file-only followees are appended sorted by id.
  std::vector<std::set<std::string>> extra_followees(corpus.users.size());
  std::unordered_set<std::string> has_incoming;
  for (auto& u : corpus.users) {
    for (const auto& f : u.followee_ids) {
      if (!user_pos.count(f)) throw Error("user " + u.id + " follows unknown user " + f);
      has_incoming.insert(f);
    }
  }
  for_each_jsonl(edges_path, [&](const Json& rec, size_t lineno) {
    const std::string src = require_string(rec, "src_user_id", lineno);
    const std::string dst = require_string(rec, "dst_user_id", lineno);
    auto sit = user_pos.find(src);
    if (sit == user_pos.end())
      throw Error("edge references unknown user " + src + " at line " + std::to_string(lineno));
    if (!user_pos.count(dst))
      throw Error("edge references unknown user " + dst + " at line " + std::to_string(lineno));
    User& u = corpus.users[sit->second];
    if (std::find(u.followee_ids.begin(), u.followee_ids.end(), dst) == u.followee_ids.end())
      extra_followees[sit->second].insert(dst);
    has_incoming.insert(dst);
  });
  for (size_t i = 0; i < corpus.users.size(); ++i)
    for (const auto& f : extra_followees[i]) corpus.users[i].followee_ids.push_back(f);

  for (auto& u : corpus.users) {
    if (has_incoming.count(u.id)) u.role = UserRole::Followee;
    else if (!u.followee_ids.empty()) u.role = UserRole::Follower;
    else u.role = UserRole::Isolated;
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& users_path,
                 const std::string& tweets_path, const std::string& edges_path) {
  JsonlWriter users_out(users_path);
  for (const auto& u : corpus.users) {
    Json rec{{"id", u.id},
             {"description", u.description},
             {"target", u.target.name},
             {"followee_ids", u.followee_ids}};
    if (u.label) rec["label"] = to_string(*u.label);
    users_out.write(rec);
  }
  JsonlWriter tweets_out(tweets_path);
  for (const auto& t : corpus.tweets)
    tweets_out.write(Json{{"id", t.id}, {"author_id", t.author_id}, {"text", t.text}});
  JsonlWriter edges_out(edges_path);
  for (const auto& u : corpus.users)
    for (const auto& f : u.followee_ids)
      edges_out.write(Json{{"src_user_id", u.id}, {"dst_user_id", f}});
}

DatasetSplit split_dataset(const std::vector<User>& users, const TargetId& target, uint64_t seed) {
  std::array<std::vector<std::string>, kNumClasses> by_class;
  for (const auto& u : users) {
    if (u.target != target) throw Error("user " + u.id + " is not labeled for target " + target.name);
    if (!u.label) throw Error("user " + u.id + " has no label");
    by_class[class_index(*u.label)].push_back(u.id);
  }

  DatasetSplit split;
  split.target = target;
  split.seed = seed;
  Rng rng(seed);
  for (int c = 0; c < kNumClasses; ++c) {
    auto& ids = by_class[c];
    if (ids.empty()) continue;
    if (ids.size() < 3)
      throw Error("cannot stratify: class " + std::string(to_string(label_from_index(c))) +
                  " has only " + std::to_string(ids.size()) + " users");
    std::sort(ids.begin(), ids.end());
    rng.shuffle(ids);
    const size_t n = ids.size();
    const size_t n_train = 7 * n / 10;     // floor(0.7 n), exact in integers
    const size_t n_val = 3 * n / 20;       // floor(0.15 n)
    for (size_t i = 0; i < n; ++i) {
      if (i < n_train) split.train.push_back(ids[i]);
      else if (i < n_train + n_val) split.val.push_back(ids[i]);
      else split.test.push_back(ids[i]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

CorpusStats corpus_stats(const std::vector<User>& users, const std::vector<Tweet>& tweets) {
  CorpusStats stats;
  stats.total_users = users.size();
  stats.total_tweets = tweets.size();

  std::unordered_map<std::string, const User*> by_id;
  for (const auto& u : users) {
    auto& t = stats.per_target[u.target.name];
    t.users += 1;
    if (u.label) t.label_counts[class_index(*u.label)] += 1;
    else t.unlabeled += 1;
    stats.role_counts[static_cast<int>(u.role)] += 1;
    by_id.emplace(u.id, &u);
  }
  for (const auto& tw : tweets) {
    auto it = by_id.find(tw.author_id);
    if (it != by_id.end()) stats.per_target[it->second->target.name].tweets += 1;
  }
  for (auto& [name, t] : stats.per_target)
    for (int c = 0; c < kNumClasses; ++c) t.label_pct[c] = percent(t.label_counts[c], t.users);
  for (int r = 0; r < 3; ++r) stats.role_pct[r] = percent(stats.role_counts[r], stats.total_users);
  return stats;
}

void save_split(const DatasetSplit& split, const std::string& path) {
  save_json_file(path, Json{{"target", split.target.name},
                            {"seed", split.seed},
                            {"train", split.train},
                            {"val", split.val},
                            {"test", split.test}});
}

DatasetSplit load_split(const std::string& path) {
  Json j = load_json_file(path);
  DatasetSplit split;
  split.target = TargetId(j.at("target").get<std::string>());
  split.seed = j.at("seed").get<uint64_t>();
  split.train = j.at("train").get<std::vector<std::string>>();
  split.val = j.at("val").get<std::vector<std::string>>();
  split.test = j.at("test").get<std::vector<std::string>>();
  return split;
}

}  // namespace mrfg
