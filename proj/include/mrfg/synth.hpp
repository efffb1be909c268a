#pragma once
// Synthetic social corpus with planted structure. Graph-informative
// dimensions carry label signal that only becomes readable after
// neighborhood aggregation (per-node values are swamped by structural
// noise); content dimensions carry the user's own label signal directly,
// while tweet nodes contribute label-free chatter on them, so propagation
// dilutes content dims and favors graph dims in the TFI ranking. A share
// of users growing with the noise level keeps their own content
// stance-silent, which is exactly the context the graph path recovers.

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mrfg/chat_client.hpp"
#include "mrfg/core.hpp"
#include "mrfg/embed.hpp"
#include "mrfg/ingest.hpp"

namespace mrfg {

struct SynthSpec {
  size_t n_users = 200;
  std::array<size_t, 2> tweets_per_user{1, 3};
  std::array<size_t, 2> followees_per_user{2, 5};
  double homophily = 0.9;  // probability a follow edge links same-label users
  std::array<double, kNumClasses> label_distribution{0.4, 0.4, 0.2};  // favor, against, none
  size_t dim = 128;
  double graph_dim_fraction = 0.3;
  double noise_level = 0.5;      // >= 0
  double relevance_noise = 0.0;  // fraction of tweets that are off-topic
  uint64_t seed = 0;
  std::string target = "synthetic";

  void validate() const;
};

struct GeneratedCorpus {
  SynthSpec spec;
  Corpus corpus;                 // labels and roles filled in
  EmbeddingTable embeddings;     // every user id and tweet id
  std::vector<size_t> graph_dims;
  std::vector<size_t> content_dims;
  std::unordered_map<std::string, bool> tweet_on_topic;
};

GeneratedCorpus generate(const SynthSpec& spec);

// Scripted chat responses keyed to the planted relevance truth: on-topic
// tweets score 3, off-topic score 1. Chunking mirrors the live filter.
ScriptedChatClient make_mock_script(const GeneratedCorpus& gen, size_t max_tweets_per_prompt);

// Writes users/tweets/edges/embeddings/planted metadata (+ mock script)
// under dir with fixed file names.
struct SynthPaths {
  std::string users, tweets, edges, embeddings, planted, mock_script;
};
SynthPaths synth_paths(const std::string& dir);
void write_generated(const GeneratedCorpus& gen, const std::string& dir,
                     size_t max_tweets_per_prompt);

struct PlantedTfiReport {
  double recovery_fraction = 0.0;  // planted graph dims found in the top block
  double max_score = 0.0;
  double min_score = 0.0;
  std::vector<double> scores;
};

// Runs the ranking stage with ground-truth relevance filtering and
// reports how much of the planted structure the TFI ranking recovers.
PlantedTfiReport planted_tfi_check(const GeneratedCorpus& gen, size_t bins, uint64_t split_seed);

}  // namespace mrfg
