#pragma once
// Experiment harness: wires filter -> graph -> features -> ranking ->
// training -> metrics for in-target, cross-target, ablation, and r-sweep
// runs, with multi-seed averaging.

#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "mrfg/chat_client.hpp"
#include "mrfg/core.hpp"
#include "mrfg/embed.hpp"
#include "mrfg/gsi.hpp"
#include "mrfg/ingest.hpp"
#include "mrfg/metrics.hpp"
#include "mrfg/relevance.hpp"

namespace mrfg {

enum class ExperimentMode { InTarget, CrossTarget, Ablation, Sweep };
enum class Variant { Full, NoLlmFu, NoStfiR, NoStfiM };
enum class FilterStrategy { Llm, Cosine, Mock, Off };

const char* to_string(ExperimentMode m);
const char* to_string(Variant v);
const char* to_string(FilterStrategy s);
Variant variant_from_string(const std::string& s);
FilterStrategy strategy_from_string(const std::string& s);

struct ExperimentSpec {
  ExperimentMode mode = ExperimentMode::InTarget;
  Variant variant = Variant::Full;
  std::string train_target;
  std::string eval_target;  // equals train_target for in-target runs
  std::vector<uint64_t> seeds{0, 1, 2};
  std::vector<double> r_values;  // sweep mode only

  void validate() const;
};

// Everything a run needs beyond the run description. The chat client is required
// for the llm and mock strategies; the embedding table for external
// embedders.
struct PipelineContext {
  const Corpus* corpus = nullptr;
  EmbedderSpec embedder;
  const EmbeddingTable* table = nullptr;
  FilterStrategy strategy = FilterStrategy::Off;
  LlmEndpointConfig endpoint;
  ChatClient* chat = nullptr;
  VerdictCache* cache = nullptr;
  size_t tfi_bins = 16;
  GsiConfig gsi;
};

struct SeedRun {
  uint64_t seed = 0;
  MetricReport metrics;
  std::vector<EpochLog> train_log;
  size_t best_epoch = 0;
};

struct MeanMetrics {
  double f_favor = 0.0;
  double f_against = 0.0;
  double f_avg = 0.0;
  double accuracy = 0.0;
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<SeedRun> per_seed;
  MeanMetrics mean;
};

MeanMetrics mean_of(const std::vector<SeedRun>& runs);

ExperimentResult run_experiment(const ExperimentSpec& spec, const PipelineContext& ctx);

struct SweepPoint {
  double r = 0.0;
  std::string strategy;
  double f_avg = 0.0;  // mean over seeds
};

// Full experiment per (r, strategy) pair; seeds averaged.
std::vector<SweepPoint> run_sweep(const ExperimentSpec& spec, PipelineContext ctx,
                                  const std::vector<FilterStrategy>& strategies,
                                  const std::map<FilterStrategy, ChatClient*>& clients);

void save_experiment_result(const ExperimentResult& result, const std::string& path);
void save_sweep_csv(const std::vector<SweepPoint>& points, const std::string& path);

// Mid-level pieces, also used by the CLI stages.

struct CorpusIndex {
  std::unordered_map<std::string, const User*> users_by_id;
  std::unordered_map<std::string, const Tweet*> tweets_by_id;

  explicit CorpusIndex(const Corpus& corpus) {
    for (const auto& u : corpus.users) users_by_id.emplace(u.id, &u);
    for (const auto& t : corpus.tweets) tweets_by_id.emplace(t.id, &t);
  }
};

// All tweets authored by u's followees, followees in stored order.
std::vector<Tweet> collect_followee_tweets(const CorpusIndex& index, const User& u);

// Applies the configured strategy and returns per-user retained tweets.
std::map<std::string, std::vector<Tweet>> filter_corpus(
    const std::vector<User>& view_users, const Corpus& corpus, const PipelineContext& ctx,
    std::vector<FilterReport>* reports_out = nullptr);

// Users belonging to one stance target.
std::vector<User> target_view(const Corpus& corpus, const std::string& target);

}  // namespace mrfg
