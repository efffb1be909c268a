#include "mrfg/relevance.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "mrfg/embed.hpp"
#include "mrfg/jsonl.hpp"

namespace mrfg {

namespace {

const char* kInstruction =
    "Your task is to analyze the degree to which tweets posted by the original user are "
    "related to other posts. The degree of correlation between a post and a post is "
    "represented by a score, the score 1 means no association, the score 2 means weak "
    "association, and the score 3 means strong association.";

const char* kOutputFormat =
    "Use score to indicate the degree to which these tweets are related to the tweets "
    "posted by users, and are given in the order of tweets, only output the tweet number "
    "and corresponding score, the format example is \"(tweet number:corresponding score)\".";

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::vector<PromptChunk> build_prompts(const User& u, const std::vector<Tweet>& own_tweets,
                                       const std::vector<Tweet>& followee_tweets,
                                       size_t max_tweets_per_prompt) {
  if (followee_tweets.empty()) throw Error("no followee tweets to score for user " + u.id);
  if (max_tweets_per_prompt == 0) throw Error("max_tweets_per_prompt must be > 0");

  // Group by followee, first appearance order, tweets in given order.
  std::vector<std::string> author_order;
  std::unordered_map<std::string, std::vector<const Tweet*>> by_author;
  for (const auto& t : followee_tweets) {
    auto [it, inserted] = by_author.try_emplace(t.author_id);
    if (inserted) author_order.push_back(t.author_id);
    it->second.push_back(&t);
  }

  struct Entry {
    std::string key;
    const Tweet* tweet;
  };
  std::vector<Entry> entries;
  for (const auto& author : author_order) {
    size_t k = 0;
    for (const Tweet* t : by_author[author])
      entries.push_back({author + "_" + std::to_string(++k), t});
  }

  std::string own_block;
  size_t n = 0;
  for (const auto& t : own_tweets) own_block += std::to_string(++n) + ":\"" + t.text + "\"\n";
  if (own_tweets.empty()) own_block = "(none)\n";

  std::vector<PromptChunk> chunks;
  for (size_t start = 0; start < entries.size(); start += max_tweets_per_prompt) {
    const size_t end = std::min(start + max_tweets_per_prompt, entries.size());
    PromptChunk chunk;
    chunk.request_key = u.id + "#" + std::to_string(chunks.size());

    std::string followee_block;
    for (size_t i = start; i < end; ++i) {
      followee_block += entries[i].key + ":" + entries[i].tweet->text + "\n";
      chunk.keys.emplace_back(entries[i].key, entries[i].tweet->id);
    }
    chunk.text = std::string(kInstruction) + "\n\nUser's Tweets:\n" + own_block +
                 "\nFollowees's Tweets:\n" + followee_block + "\n" + kOutputFormat + "\n";
    chunks.push_back(std::move(chunk));
  }
  return chunks;
}

std::string build_prompt(const User& u, const std::vector<Tweet>& own_tweets,
                         const std::vector<Tweet>& followee_tweets) {
  return build_prompts(u, own_tweets, followee_tweets, followee_tweets.size()).front().text;
}

ParsedScores parse_scores(const std::string& response,
                          const std::vector<std::string>& expected_keys) {
  ParsedScores out;
  std::unordered_set<std::string> expected(expected_keys.begin(), expected_keys.end());
  size_t parseable = 0;

  size_t pos = 0;
  while ((pos = response.find('(', pos)) != std::string::npos) {
    const size_t colon = response.find(':', pos + 1);
    const size_t close = response.find(')', pos + 1);
    if (colon == std::string::npos || close == std::string::npos || colon > close) {
      ++pos;
      continue;
    }
    const std::string key = trim(response.substr(pos + 1, colon - pos - 1));
    const std::string score_str = trim(response.substr(colon + 1, close - colon - 1));
    pos = close + 1;

    if (key.empty() || score_str.empty()) continue;
    int score = 0;
    try {
      size_t used = 0;
      score = std::stoi(score_str, &used);
      if (used != score_str.size()) continue;
    } catch (...) {
      continue;
    }
    ++parseable;

    if (!expected.count(key)) {
      out.warnings.push_back("ignoring unknown key \"" + key + "\"");
      continue;
    }
    if (out.by_key.count(key)) {
      out.warnings.push_back("duplicate key \"" + key + "\", keeping first value");
      continue;
    }
    if (score < 1 || score > 3) {
      out.warnings.push_back("out-of-range score " + std::to_string(score) + " for \"" + key +
                             "\", defaulting to 1");
      score = 1;
    }
    out.by_key.emplace(key, score);
  }

  if (parseable == 0) throw Error("unparseable response: no (key:score) pairs found");

  for (const auto& key : expected_keys) {
    if (!out.by_key.count(key)) {
      out.warnings.push_back("no score for \"" + key + "\", defaulting to 1");
      out.by_key.emplace(key, 1);
    }
  }
  return out;
}

std::string render_score_pairs(const std::vector<std::pair<std::string, int>>& pairs) {
  std::string out;
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (i) out += ", ";
    out += "(" + pairs[i].first + ":" + std::to_string(pairs[i].second) + ")";
  }
  return out;
}

VerdictCache VerdictCache::open(const std::string& path) {
  VerdictCache c;
  c.path_ = path;
  if (!path.empty() && std::filesystem::exists(path)) {
    for_each_jsonl(path, [&](const Json& rec, size_t lineno) {
      if (!rec.contains("user_id") || !rec.contains("tweet_id") || !rec.contains("model") ||
          !rec.contains("score"))
        throw Error("malformed cache record at line " + std::to_string(lineno));
      const std::string key = rec["user_id"].get<std::string>() + "\t" +
                              rec["tweet_id"].get<std::string>() + "\t" +
                              rec["model"].get<std::string>();
      c.entries_[key] = rec["score"].get<int>();
    });
  }
  return c;
}

std::optional<int> VerdictCache::lookup(const std::string& user_id, const std::string& tweet_id,
                                        const std::string& model) const {
  auto it = entries_.find(user_id + "\t" + tweet_id + "\t" + model);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void VerdictCache::put(const std::string& user_id, const std::string& tweet_id,
                       const std::string& model, int score) {
  const std::string key = user_id + "\t" + tweet_id + "\t" + model;
  if (entries_.emplace(key, score).second) fresh_.emplace_back(key, score);
}

void VerdictCache::flush() {
  if (path_.empty() || fresh_.empty()) return;
  std::sort(fresh_.begin(), fresh_.end());
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error("cannot write cache " + path_);
  for (const auto& [key, score] : fresh_) {
    const size_t t1 = key.find('\t');
    const size_t t2 = key.find('\t', t1 + 1);
    out << Json{{"user_id", key.substr(0, t1)},
                {"tweet_id", key.substr(t1 + 1, t2 - t1 - 1)},
                {"model", key.substr(t2 + 1)},
                {"score", score}}
               .dump()
        << "\n";
  }
  fresh_.clear();
}

namespace {

FilterReport assemble_report(const std::string& user_id,
                             const std::vector<Tweet>& followee_tweets,
                             const std::unordered_map<std::string, int>& score_by_tweet,
                             FilterProvenance provenance) {
  FilterReport report;
  report.user_id = user_id;
  report.provenance = provenance;
  for (const auto& t : followee_tweets) {
    const int score = score_by_tweet.at(t.id);
    report.scores[t.id] = score;
    if (score >= kRetainThreshold) report.retained.push_back(t.id);
    else report.discarded.push_back(t.id);
  }
  return report;
}

}  // namespace

FilterReport filter_llm(const User& u, const std::vector<Tweet>& own_tweets,
                        const std::vector<Tweet>& followee_tweets, ChatClient& client,
                        const LlmEndpointConfig& config, VerdictCache* cache,
                        FilterProvenance provenance) {
  config.validate();
  std::unordered_map<std::string, int> score_by_tweet;

  std::vector<Tweet> pending;
  for (const auto& t : followee_tweets) {
    if (cache) {
      if (auto hit = cache->lookup(u.id, t.id, config.model)) {
        score_by_tweet[t.id] = *hit;
        continue;
      }
    }
    pending.push_back(t);
  }

  if (!pending.empty()) {
    auto chunks = build_prompts(u, own_tweets, pending, config.max_tweets_per_prompt);
    std::vector<std::string> responses(chunks.size());
    std::vector<std::string> failures(chunks.size());

    // Up to parallel_requests chunks in flight; results land in fixed
    // slots so completion order cannot affect the report.
    const size_t workers = std::min<size_t>(config.parallel_requests, chunks.size());
    if (workers <= 1) {
      for (size_t i = 0; i < chunks.size(); ++i)
        responses[i] = client.complete({chunks[i].request_key, chunks[i].text});
    } else {
      std::vector<std::thread> pool;
      std::atomic<size_t> next{0};
      for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
          for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= chunks.size()) return;
            try {
              responses[i] = client.complete({chunks[i].request_key, chunks[i].text});
            } catch (const std::exception& e) {
              failures[i] = e.what();
            }
          }
        });
      }
      for (auto& t : pool) t.join();
      for (const auto& f : failures)
        if (!f.empty()) throw Error(f);
    }

    for (size_t i = 0; i < chunks.size(); ++i) {
      std::vector<std::string> expected;
      for (const auto& [key, tweet_id] : chunks[i].keys) expected.push_back(key);
      ParsedScores parsed = parse_scores(responses[i], expected);
      for (const auto& w : parsed.warnings)
        std::cerr << "[filter] user " << u.id << " chunk " << i << ": " << w << "\n";
      for (const auto& [key, tweet_id] : chunks[i].keys) {
        const int score = parsed.by_key.at(key);
        score_by_tweet[tweet_id] = score;
        if (cache) cache->put(u.id, tweet_id, config.model, score);
      }
    }
  }

  return assemble_report(u.id, followee_tweets, score_by_tweet, provenance);
}

int cosine_score(double cos) {
  if (cos >= 0.85) return 3;
  if (cos >= 0.7) return 2;
  return 1;
}

FilterReport filter_cosine(
    const std::string& user_id, const std::vector<double>& user_vec,
    const std::vector<std::pair<std::string, std::vector<double>>>& tweet_vecs) {
  std::unordered_map<std::string, int> score_by_tweet;
  std::vector<Tweet> order;
  for (const auto& [tweet_id, vec] : tweet_vecs) {
    score_by_tweet[tweet_id] = cosine_score(cosine(user_vec, vec));
    order.push_back(Tweet{tweet_id, "", ""});
  }
  return assemble_report(user_id, order, score_by_tweet, FilterProvenance::Cosine);
}

void save_filter_reports(const std::vector<FilterReport>& reports, const std::string& path) {
  JsonlWriter out(path);
  for (const auto& r : reports) {
    out.write(Json{{"user_id", r.user_id},
                   {"provenance", to_string(r.provenance)},
                   {"scores", r.scores},
                   {"retained", r.retained},
                   {"discarded", r.discarded}});
  }
}

std::vector<FilterReport> load_filter_reports(const std::string& path) {
  std::vector<FilterReport> reports;
  for_each_jsonl(path, [&](const Json& rec, size_t) {
    FilterReport r;
    r.user_id = rec.at("user_id").get<std::string>();
    const std::string prov = rec.at("provenance").get<std::string>();
    if (prov == "llm") r.provenance = FilterProvenance::Llm;
    else if (prov == "cosine") r.provenance = FilterProvenance::Cosine;
    else if (prov == "mock") r.provenance = FilterProvenance::Mock;
    else if (prov == "off") r.provenance = FilterProvenance::Off;
    else throw Error("unknown provenance " + prov);
    r.scores = rec.at("scores").get<std::map<std::string, int>>();
    r.retained = rec.at("retained").get<std::vector<std::string>>();
    r.discarded = rec.at("discarded").get<std::vector<std::string>>();
    reports.push_back(std::move(r));
  });
  return reports;
}

}  // namespace mrfg
