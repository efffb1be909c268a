#include "mrfg/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include "mrfg/graph.hpp"
#include "mrfg/jsonl.hpp"
#include "mrfg/tfi.hpp"

namespace mrfg {

const char* to_string(ExperimentMode m) {
  switch (m) {
    case ExperimentMode::InTarget: return "in_target";
    case ExperimentMode::CrossTarget: return "cross_target";
    case ExperimentMode::Ablation: return "ablation";
    case ExperimentMode::Sweep: return "sweep";
  }
  return "?";
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoLlmFu: return "no_llm_fu";
    case Variant::NoStfiR: return "no_stfi_R";
    case Variant::NoStfiM: return "no_stfi_m";
  }
  return "?";
}

const char* to_string(FilterStrategy s) {
  switch (s) {
    case FilterStrategy::Llm: return "llm";
    case FilterStrategy::Cosine: return "cosine";
    case FilterStrategy::Mock: return "mock";
    case FilterStrategy::Off: return "off";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "full") return Variant::Full;
  if (s == "no_llm_fu") return Variant::NoLlmFu;
  if (s == "no_stfi_R" || s == "no_stfi_r") return Variant::NoStfiR;
  if (s == "no_stfi_m") return Variant::NoStfiM;
  throw Error("unknown variant " + s);
}

FilterStrategy strategy_from_string(const std::string& s) {
  if (s == "llm") return FilterStrategy::Llm;
  if (s == "cosine") return FilterStrategy::Cosine;
  if (s == "mock") return FilterStrategy::Mock;
  if (s == "off") return FilterStrategy::Off;
  throw Error("unknown filter strategy " + s);
}

void ExperimentSpec::validate() const {
  if (train_target.empty()) throw Error("experiment needs a train_target");
  if (mode == ExperimentMode::CrossTarget && train_target == eval_target)
    throw Error("cross-target experiment needs distinct targets");
  if (seeds.empty()) throw Error("experiment needs at least one seed");
  if (mode == ExperimentMode::Sweep && r_values.empty())
    throw Error("sweep mode needs r_values");
}

std::vector<User> target_view(const Corpus& corpus, const std::string& target) {
  std::vector<User> view;
  for (const auto& u : corpus.users)
    if (u.target.name == target) view.push_back(u);
  if (view.empty()) throw Error("no users for target " + target);
  return view;
}

std::vector<Tweet> collect_followee_tweets(const CorpusIndex& index, const User& u) {
  std::vector<Tweet> out;
  for (const auto& fid : u.followee_ids) {
    auto it = index.users_by_id.find(fid);
    if (it == index.users_by_id.end()) throw Error("filter stage: unknown followee " + fid);
    for (const auto& tid : it->second->tweet_ids) out.push_back(*index.tweets_by_id.at(tid));
  }
  return out;
}

std::map<std::string, std::vector<Tweet>> filter_corpus(const std::vector<User>& view_users,
                                                        const Corpus& corpus,
                                                        const PipelineContext& ctx,
                                                        std::vector<FilterReport>* reports_out) {
  CorpusIndex index(corpus);
  std::map<std::string, std::vector<Tweet>> retained;
  for (const auto& u : view_users) {
    std::vector<Tweet> followee_tweets = collect_followee_tweets(index, u);
    if (followee_tweets.empty()) continue;

    std::vector<Tweet> own;
    for (const auto& tid : u.tweet_ids) own.push_back(*index.tweets_by_id.at(tid));

    FilterReport report;
    switch (ctx.strategy) {
      case FilterStrategy::Off: {
        report.user_id = u.id;
        report.provenance = FilterProvenance::Off;
        for (const auto& t : followee_tweets) {
          report.scores[t.id] = 3;
          report.retained.push_back(t.id);
        }
        break;
      }
      case FilterStrategy::Llm:
      case FilterStrategy::Mock: {
        if (!ctx.chat) throw Error("filter stage: no chat client configured");
        report = filter_llm(u, own, followee_tweets, *ctx.chat, ctx.endpoint, ctx.cache,
                            ctx.strategy == FilterStrategy::Llm ? FilterProvenance::Llm
                                                                : FilterProvenance::Mock);
        break;
      }
      case FilterStrategy::Cosine: {
        EmbedResult uvec = embed_user(u, own, ctx.embedder, ctx.table);
        std::vector<std::pair<std::string, std::vector<double>>> tvecs;
        for (const auto& t : followee_tweets)
          tvecs.emplace_back(t.id, embed_tweet(t, ctx.embedder, ctx.table).vec);
        report = filter_cosine(u.id, uvec.vec, tvecs);
        break;
      }
    }

    std::vector<Tweet> keep;
    std::unordered_map<std::string, const Tweet*> by_id;
    for (const auto& t : followee_tweets) by_id.emplace(t.id, &t);
    for (const auto& tid : report.retained) keep.push_back(*by_id.at(tid));
    if (!keep.empty()) retained.emplace(u.id, std::move(keep));
    if (reports_out) reports_out->push_back(std::move(report));
  }
  return retained;
}

namespace {

struct PreparedTarget {
  SocialGraph graph;
  FeatureMatrix features;
  std::vector<std::optional<StanceLabel>> labels;  // per user node
};

PreparedTarget prepare_target(const std::string& target, const PipelineContext& ctx,
                              Variant variant) {
  PipelineContext filter_ctx = ctx;
  if (variant == Variant::NoLlmFu) filter_ctx.strategy = FilterStrategy::Off;

  std::vector<User> view = target_view(*ctx.corpus, target);
  auto retained = filter_corpus(view, *ctx.corpus, filter_ctx);

  PreparedTarget prep;
  prep.graph = build_graph(view, ctx.corpus->tweets, retained);
  prep.features = assemble_feature_matrix(prep.graph, ctx.embedder, ctx.table);
  for (const auto& u : prep.graph.users) prep.labels.push_back(u.label);
  return prep;
}

FeatureRouting routing_for(Variant variant, const FmiRanking& ranking, double r) {
  switch (variant) {
    case Variant::NoStfiR: return route_all_graph(ranking);
    case Variant::NoStfiM: return route_all_mlp(ranking);
    default: return route_features(ranking, r);
  }
}

SeedRun run_seed(const ExperimentSpec& spec, const PipelineContext& ctx, uint64_t seed,
                 double r, const PreparedTarget& train_prep, const PreparedTarget& eval_prep,
                 bool cross) {
  // Split and ranking always come from the training target.
  std::vector<User> train_users = target_view(*ctx.corpus, spec.train_target);
  DatasetSplit split = split_dataset(train_users, TargetId(spec.train_target), seed);

  std::vector<size_t> train_idx;
  for (const auto& id : split.train) train_idx.push_back(train_prep.graph.node_of_user(id));
  FmiRanking ranking =
      rank_tfi(train_prep.graph, train_prep.features.values, train_prep.labels, train_idx,
               ctx.tfi_bins);

  GsiConfig gsi = ctx.gsi;
  gsi.seed = seed;
  gsi.r = r;
  FeatureRouting routing = routing_for(spec.variant, ranking, r);
  TrainResult trained =
      train(gsi, train_prep.graph, train_prep.features.values, ranking, routing, split);

  // Evaluate on the eval target's held-out test users.
  std::vector<std::string> test_ids;
  std::vector<StanceLabel> gold;
  if (cross) {
    std::vector<User> eval_users = target_view(*ctx.corpus, spec.eval_target);
    DatasetSplit eval_split = split_dataset(eval_users, TargetId(spec.eval_target), seed);
    test_ids = eval_split.test;
  } else {
    test_ids = split.test;
  }
  for (const auto& id : test_ids) {
    const auto& label = eval_prep.graph.users[eval_prep.graph.node_of_user(id)].label;
    if (!label) throw Error("test user " + id + " has no label");
    gold.push_back(*label);
  }
  std::vector<StanceLabel> predicted =
      predict(trained.model, eval_prep.graph, eval_prep.features.values, test_ids);

  SeedRun run;
  run.seed = seed;
  run.metrics = compute_metrics(gold, predicted);
  run.train_log = trained.log;
  run.best_epoch = trained.best_epoch;
  return run;
}

}  // namespace

MeanMetrics mean_of(const std::vector<SeedRun>& runs) {
  MeanMetrics m;
  if (runs.empty()) return m;
  for (const auto& r : runs) {
    m.f_favor += r.metrics.f_favor;
    m.f_against += r.metrics.f_against;
    m.f_avg += r.metrics.f_avg;
    m.accuracy += r.metrics.accuracy;
  }
  const double n = static_cast<double>(runs.size());
  m.f_favor /= n;
  m.f_against /= n;
  m.f_avg /= n;
  m.accuracy /= n;
  return m;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const PipelineContext& ctx) {
  spec.validate();
  if (!ctx.corpus) throw Error("experiment stage: no corpus loaded");
  const bool cross = spec.mode == ExperimentMode::CrossTarget;
  const std::string eval_target = cross ? spec.eval_target : spec.train_target;

  PreparedTarget train_prep = prepare_target(spec.train_target, ctx, spec.variant);
  PreparedTarget eval_prep_storage;
  const PreparedTarget* eval_prep = &train_prep;
  if (cross) {
    eval_prep_storage = prepare_target(eval_target, ctx, spec.variant);
    eval_prep = &eval_prep_storage;
  }

  ExperimentResult result;
  result.spec = spec;
  for (uint64_t seed : spec.seeds)
    result.per_seed.push_back(
        run_seed(spec, ctx, seed, ctx.gsi.r, train_prep, *eval_prep, cross));
  result.mean = mean_of(result.per_seed);
  return result;
}

std::vector<SweepPoint> run_sweep(const ExperimentSpec& spec, PipelineContext ctx,
                                  const std::vector<FilterStrategy>& strategies,
                                  const std::map<FilterStrategy, ChatClient*>& clients) {
  spec.validate();
  std::vector<SweepPoint> points;
  for (FilterStrategy strategy : strategies) {
    ctx.strategy = strategy;
    auto it = clients.find(strategy);
    ctx.chat = it != clients.end() ? it->second : nullptr;

    PreparedTarget prep = prepare_target(spec.train_target, ctx, spec.variant);
    for (double r : spec.r_values) {
      std::vector<SeedRun> runs;
      for (uint64_t seed : spec.seeds) runs.push_back(run_seed(spec, ctx, seed, r, prep, prep, false));
      points.push_back({r, to_string(strategy), mean_of(runs).f_avg});
    }
  }
  return points;
}

namespace {

Json metrics_to_json(const MetricReport& m) {
  Json confusion = Json::array();
  for (int g = 0; g < kNumClasses; ++g) {
    Json row = Json::array();
    for (int p = 0; p < kNumClasses; ++p) row.push_back(m.confusion[g][p]);
    confusion.push_back(row);
  }
  return Json{{"f_favor", m.f_favor},
              {"f_against", m.f_against},
              {"f_avg", m.f_avg},
              {"accuracy", m.accuracy},
              {"n", m.n},
              {"confusion", confusion}};
}

}  // namespace

void save_experiment_result(const ExperimentResult& result, const std::string& path) {
  Json per_seed = Json::array();
  for (const auto& run : result.per_seed) {
    Json log = Json::array();
    for (const auto& e : run.train_log)
      log.push_back(Json{{"epoch", e.epoch}, {"train_loss", e.train_loss},
                         {"val_f_avg", e.val_f_avg}});
    per_seed.push_back(Json{{"seed", run.seed},
                            {"metrics", metrics_to_json(run.metrics)},
                            {"best_epoch", run.best_epoch},
                            {"train_log", log}});
  }
  save_json_file(path, Json{{"spec",
                             Json{{"mode", to_string(result.spec.mode)},
                                  {"variant", to_string(result.spec.variant)},
                                  {"train_target", result.spec.train_target},
                                  {"eval_target", result.spec.eval_target},
                                  {"seeds", result.spec.seeds},
                                  {"r_values", result.spec.r_values}}},
                            {"per_seed", per_seed},
                            {"mean", Json{{"f_favor", result.mean.f_favor},
                                          {"f_against", result.mean.f_against},
                                          {"f_avg", result.mean.f_avg},
                                          {"accuracy", result.mean.accuracy}}}});
}

void save_sweep_csv(const std::vector<SweepPoint>& points, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << "r,strategy,f_avg\n";
  for (const auto& p : points) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f,%s,%.6f", p.r, p.strategy.c_str(), p.f_avg);
    out << buf << "\n";
  }
}

}  // namespace mrfg
