#pragma once
// Relevance filtering of followee tweets. Scores live in {1,2,3} =
// none/weak/strong; tweets scoring >= 2 are retained. Scoring comes from
// a chat model behind a prompt protocol, from a scripted mock replaying
// the same protocol, or from a cosine-similarity baseline.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mrfg/chat_client.hpp"
#include "mrfg/core.hpp"

namespace mrfg {

struct RelevanceScore {
  int value = 1;
  explicit RelevanceScore(int v) : value(v) {
    if (v < 1 || v > 3) throw Error("relevance score out of range: " + std::to_string(v));
  }
};

constexpr int kRetainThreshold = 2;

enum class FilterProvenance { Llm, Cosine, Mock, Off };

inline const char* to_string(FilterProvenance p) {
  switch (p) {
    case FilterProvenance::Llm: return "llm";
    case FilterProvenance::Cosine: return "cosine";
    case FilterProvenance::Mock: return "mock";
    case FilterProvenance::Off: return "off";
  }
  return "?";
}

struct FilterReport {
  std::string user_id;
  std::map<std::string, int> scores;     // tweet id -> score
  std::vector<std::string> retained;     // input order, score >= 2
  std::vector<std::string> discarded;    // input order, score 1
  FilterProvenance provenance = FilterProvenance::Mock;
};

// One chat request covering up to max_tweets_per_prompt followee tweets.
struct PromptChunk {
  std::string request_key;  // "<user_id>#<chunk index>"
  std::string text;
  std::vector<std::pair<std::string, std::string>> keys;  // prompt key -> tweet id
};

// Prompt keys are "<followee_id>_<k>" with k counting that followee's
// tweets across the whole batch; chunks cut the sequence at
// max_tweets_per_prompt entries.
std::vector<PromptChunk> build_prompts(const User& u, const std::vector<Tweet>& own_tweets,
                                       const std::vector<Tweet>& followee_tweets,
                                       size_t max_tweets_per_prompt);

// Single-prompt convenience used by tests and small batches.
std::string build_prompt(const User& u, const std::vector<Tweet>& own_tweets,
                         const std::vector<Tweet>& followee_tweets);

struct ParsedScores {
  std::map<std::string, int> by_key;
  std::vector<std::string> warnings;
};

// Extracts every "(key:score)" pair, tolerating whitespace and trailing
// punctuation. Unknown keys are dropped with a warning; expected keys
// missing from the response (or carrying out-of-range scores) default to
// 1 with a warning. A response with no parseable pair at all is an error.
ParsedScores parse_scores(const std::string& response, const std::vector<std::string>& expected_keys);

// Renders a score map the way the model is asked to answer.
std::string render_score_pairs(const std::vector<std::pair<std::string, int>>& pairs);

class VerdictCache {
 public:
  VerdictCache() = default;
  // Loads the file if it exists; missing file means an empty cache.
  static VerdictCache open(const std::string& path);

  std::optional<int> lookup(const std::string& user_id, const std::string& tweet_id,
                            const std::string& model) const;
  void put(const std::string& user_id, const std::string& tweet_id, const std::string& model,
           int score);
  // Appends entries added since open(), sorted, then clears the buffer.
  void flush();
  size_t size() const { return entries_.size(); }

 private:
  std::string path_;
  std::map<std::string, int> entries_;  // "user\ttweet\tmodel" -> score
  std::vector<std::pair<std::string, int>> fresh_;
};

FilterReport filter_llm(const User& u, const std::vector<Tweet>& own_tweets,
                        const std::vector<Tweet>& followee_tweets, ChatClient& client,
                        const LlmEndpointConfig& config, VerdictCache* cache,
                        FilterProvenance provenance);

FilterReport filter_cosine(const std::string& user_id, const std::vector<double>& user_vec,
                           const std::vector<std::pair<std::string, std::vector<double>>>& tweet_vecs);

int cosine_score(double cos);

void save_filter_reports(const std::vector<FilterReport>& reports, const std::string& path);
std::vector<FilterReport> load_filter_reports(const std::string& path);

}  // namespace mrfg
