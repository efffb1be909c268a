// mrfg: operator entry point for the stance pipeline. Subcommands map to
// pipeline stages; every artifact gets a manifest with config and input
// hashes so reports can be regenerated from the manifest chain alone.
//
// Logs go to stderr, artifacts to files, and the last stdout line is a
// machine-readable JSON summary.

#include <filesystem>
#include <iostream>
#include <memory>
#include <unordered_map>

#include "CLI11.hpp"
#include "mrfg/config.hpp"
#include "mrfg/graph.hpp"
#include "mrfg/jsonl.hpp"
#include "mrfg/tfi.hpp"

namespace fs = std::filesystem;
using namespace mrfg;

namespace {

struct CliOverrides {
  std::string config_path;
  std::string out_dir;
  std::string target;
  std::string variant;
  std::string strategy;
  double r = -1.0;
  int64_t seed = -1;
};

struct Stage {
  PipelineConfig cfg;
  CliOverrides ov;
  std::vector<std::string> artifacts;

  uint64_t seed() const {
    return ov.seed >= 0 ? static_cast<uint64_t>(ov.seed) : cfg.gsi.seed;
  }
  std::string target() const {
    return !ov.target.empty() ? ov.target : cfg.experiment.train_target;
  }
  std::string out_dir() const { return !ov.out_dir.empty() ? ov.out_dir : cfg.out_dir; }

  std::vector<std::string> corpus_inputs() const {
    return {cfg.users_path, cfg.tweets_path, cfg.edges_path};
  }

  void emit(const std::string& path, const std::string& command,
            const std::vector<std::string>& inputs) {
    write_manifest(path, command, cfg.config_hash, inputs, seed());
    artifacts.push_back(path);
  }
};

PipelineConfig apply_overrides(PipelineConfig cfg, const CliOverrides& ov) {
  if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
  if (!ov.target.empty()) {
    cfg.experiment.train_target = ov.target;
    if (cfg.experiment.mode != ExperimentMode::CrossTarget) cfg.experiment.eval_target = ov.target;
  }
  if (!ov.variant.empty()) cfg.experiment.variant = variant_from_string(ov.variant);
  if (!ov.strategy.empty()) cfg.strategy = strategy_from_string(ov.strategy);
  if (ov.r > 0.0) cfg.gsi.r = ov.r;
  if (ov.seed >= 0) {
    cfg.gsi.seed = static_cast<uint64_t>(ov.seed);
    cfg.synth.seed = static_cast<uint64_t>(ov.seed);
  }
  return cfg;
}

std::string filter_artifact(const Stage& st) {
  return st.out_dir() + "/filter_" + st.target() + "_" + to_string(st.cfg.strategy) + ".jsonl";
}
std::string ranking_artifact(const Stage& st) {
  return st.out_dir() + "/ranking_" + st.target() + "_seed" + std::to_string(st.seed()) + ".json";
}
std::string model_artifact(const Stage& st) {
  return st.out_dir() + "/model_" + st.target() + "_seed" + std::to_string(st.seed()) + ".ckpt";
}

// Loads the corpus plus whatever the configured strategy needs.
struct LoadedPipeline {
  Corpus corpus;
  EmbeddingTable table;
  bool has_table = false;
  std::unique_ptr<ChatClient> chat;
  VerdictCache cache;
  PipelineContext ctx;
};

LoadedPipeline load_pipeline(Stage& st, bool need_chat) {
  LoadedPipeline lp;
  lp.corpus = load_corpus(st.cfg.users_path, st.cfg.tweets_path, st.cfg.edges_path);
  std::cerr << "[mrfg] loaded " << lp.corpus.users.size() << " users, "
            << lp.corpus.tweets.size() << " tweets\n";

  if (st.cfg.embedder.kind == EmbedderKind::External) {
    if (st.cfg.embeddings_path.empty())
      throw Error("embed stage: external embedder needs paths.embeddings");
    lp.table = EmbeddingTable::load(st.cfg.embeddings_path, st.cfg.embedder.dim);
    lp.has_table = true;
  }
  if (need_chat) {
    if (st.cfg.strategy == FilterStrategy::Mock) {
      if (st.cfg.mock_script_path.empty())
        throw Error("filter stage: strategy mock needs paths.mock_script");
      lp.chat = std::make_unique<ScriptedChatClient>(
          ScriptedChatClient::load(st.cfg.mock_script_path));
    } else if (st.cfg.strategy == FilterStrategy::Llm) {
      lp.chat = std::make_unique<HttpChatClient>(st.cfg.endpoint);
    }
  }
  if (!st.cfg.cache_path.empty()) lp.cache = VerdictCache::open(st.cfg.cache_path);

  lp.ctx.corpus = &lp.corpus;
  lp.ctx.embedder = st.cfg.embedder;
  lp.ctx.table = lp.has_table ? &lp.table : nullptr;
  lp.ctx.strategy = st.cfg.strategy;
  lp.ctx.endpoint = st.cfg.endpoint;
  lp.ctx.chat = lp.chat.get();
  lp.ctx.cache = st.cfg.cache_path.empty() ? nullptr : &lp.cache;
  lp.ctx.tfi_bins = st.cfg.tfi_bins;
  lp.ctx.gsi = st.cfg.gsi;
  return lp;
}

// Rebuilds the retained-tweet map this stage's downstream consumers need.
std::map<std::string, std::vector<Tweet>> retained_from_artifact(const Stage& st,
                                                                 const Corpus& corpus,
                                                                 const std::vector<User>& view) {
  CorpusIndex index(corpus);
  std::map<std::string, std::vector<Tweet>> retained;
  if (st.cfg.strategy == FilterStrategy::Off) {
    for (const auto& u : view) {
      auto tweets = collect_followee_tweets(index, u);
      if (!tweets.empty()) retained.emplace(u.id, std::move(tweets));
    }
    return retained;
  }
  const std::string path = filter_artifact(st);
  if (!fs::exists(path))
    throw Error("rank stage: missing filter artifact " + path + " (run `mrfg filter` first)");
  for (const auto& report : load_filter_reports(path)) {
    std::vector<Tweet> keep;
    for (const auto& tid : report.retained) {
      auto it = index.tweets_by_id.find(tid);
      if (it == index.tweets_by_id.end())
        throw Error("filter artifact references unknown tweet " + tid);
      keep.push_back(*it->second);
    }
    if (!keep.empty()) retained.emplace(report.user_id, std::move(keep));
  }
  return retained;
}

int cmd_synth(Stage& st) {
  SynthSpec spec = st.cfg.synth;
  if (st.ov.seed >= 0) spec.seed = static_cast<uint64_t>(st.ov.seed);
  GeneratedCorpus gen = generate(spec);
  const std::string dir = !st.ov.out_dir.empty() ? st.ov.out_dir : st.cfg.synth_dir;
  write_generated(gen, dir, st.cfg.endpoint.max_tweets_per_prompt);
  const SynthPaths paths = synth_paths(dir);
  for (const auto& p : {paths.users, paths.tweets, paths.edges, paths.embeddings, paths.planted,
                        paths.mock_script})
    st.emit(p, "synth", {});
  std::cerr << "[mrfg] synthesized " << gen.corpus.users.size() << " users, "
            << gen.corpus.tweets.size() << " tweets into " << dir << "\n";
  return 0;
}

int cmd_ingest(Stage& st) {
  Corpus corpus = load_corpus(st.cfg.users_path, st.cfg.tweets_path, st.cfg.edges_path);
  CorpusStats stats = corpus_stats(corpus.users, corpus.tweets);
  fs::create_directories(st.out_dir());

  Json per_target = Json::object();
  for (const auto& [name, t] : stats.per_target) {
    per_target[name] = Json{{"users", t.users},
                            {"tweets", t.tweets},
                            {"unlabeled", t.unlabeled},
                            {"labels",
                             Json{{"favor", t.label_counts[0]},
                                  {"against", t.label_counts[1]},
                                  {"none", t.label_counts[2]}}},
                            {"label_pct",
                             Json{{"favor", t.label_pct[0]},
                                  {"against", t.label_pct[1]},
                                  {"none", t.label_pct[2]}}}};
  }
  const std::string stats_path = st.out_dir() + "/corpus_stats.json";
  save_json_file(stats_path,
                 Json{{"total_users", stats.total_users},
                      {"total_tweets", stats.total_tweets},
                      {"roles",
                       Json{{"followee", stats.role_counts[0]},
                            {"follower", stats.role_counts[1]},
                            {"isolated", stats.role_counts[2]}}},
                      {"role_pct",
                       Json{{"followee", stats.role_pct[0]},
                            {"follower", stats.role_pct[1]},
                            {"isolated", stats.role_pct[2]}}},
                      {"per_target", per_target}});
  st.emit(stats_path, "ingest", st.corpus_inputs());

  for (const auto& [name, t] : stats.per_target) {
    if (t.users == t.unlabeled) continue;
    DatasetSplit split = split_dataset(target_view(corpus, name), TargetId(name), st.seed());
    const std::string split_path =
        st.out_dir() + "/split_" + name + "_seed" + std::to_string(st.seed()) + ".json";
    save_split(split, split_path);
    st.emit(split_path, "ingest", st.corpus_inputs());
  }
  return 0;
}

int cmd_filter(Stage& st) {
  if (st.cfg.strategy == FilterStrategy::Off)
    throw Error("filter stage: strategy is off; downstream stages retain all followee tweets");
  LoadedPipeline lp = load_pipeline(st, true);
  std::vector<User> view = target_view(lp.corpus, st.target());

  std::vector<FilterReport> reports;
  filter_corpus(view, lp.corpus, lp.ctx, &reports);
  if (lp.ctx.cache) lp.cache.flush();

  fs::create_directories(st.out_dir());
  const std::string path = filter_artifact(st);
  save_filter_reports(reports, path);
  std::vector<std::string> inputs = st.corpus_inputs();
  if (st.cfg.strategy == FilterStrategy::Mock) inputs.push_back(st.cfg.mock_script_path);
  st.emit(path, "filter", inputs);
  std::cerr << "[mrfg] filtered " << reports.size() << " users (" << to_string(st.cfg.strategy)
            << ")\n";
  return 0;
}

int cmd_rank(Stage& st) {
  LoadedPipeline lp = load_pipeline(st, false);
  std::vector<User> view = target_view(lp.corpus, st.target());
  auto retained = retained_from_artifact(st, lp.corpus, view);

  SocialGraph graph = build_graph(view, lp.corpus.tweets, retained);
  FeatureMatrix features = assemble_feature_matrix(graph, st.cfg.embedder, lp.ctx.table);
  DatasetSplit split = split_dataset(view, TargetId(st.target()), st.seed());

  std::vector<size_t> train_idx;
  for (const auto& id : split.train) train_idx.push_back(graph.node_of_user(id));
  std::vector<std::optional<StanceLabel>> labels;
  for (const auto& u : graph.users) labels.push_back(u.label);
  FmiRanking ranking = rank_tfi(graph, features.values, labels, train_idx, st.cfg.tfi_bins);

  fs::create_directories(st.out_dir());
  const std::string path = ranking_artifact(st);
  save_ranking(ranking, st.target(), st.seed(), path);
  std::vector<std::string> inputs = st.corpus_inputs();
  if (st.cfg.strategy != FilterStrategy::Off) inputs.push_back(filter_artifact(st));
  st.emit(path, "rank", inputs);
  std::cerr << "[mrfg] ranked " << ranking.order.size() << " dims; top dim "
            << ranking.order.front() << " (score " << ranking.scores[ranking.order.front()]
            << ")\n";
  return 0;
}

int cmd_train(Stage& st) {
  LoadedPipeline lp = load_pipeline(st, false);
  std::vector<User> view = target_view(lp.corpus, st.target());
  auto retained = retained_from_artifact(st, lp.corpus, view);

  SocialGraph graph = build_graph(view, lp.corpus.tweets, retained);
  FeatureMatrix features = assemble_feature_matrix(graph, st.cfg.embedder, lp.ctx.table);
  DatasetSplit split = split_dataset(view, TargetId(st.target()), st.seed());

  const std::string ranking_path = ranking_artifact(st);
  if (!fs::exists(ranking_path))
    throw Error("train stage: missing ranking artifact " + ranking_path +
                " (run `mrfg rank` first)");
  FmiRanking ranking = load_ranking(ranking_path);

  GsiConfig gsi = st.cfg.gsi;
  gsi.seed = st.seed();
  FeatureRouting routing;
  switch (st.cfg.experiment.variant) {
    case Variant::NoStfiR: routing = route_all_graph(ranking); break;
    case Variant::NoStfiM: routing = route_all_mlp(ranking); break;
    default: routing = route_features(ranking, gsi.r); break;
  }
  TrainResult trained = train(gsi, graph, features.values, ranking, routing, split);

  fs::create_directories(st.out_dir());
  const std::string ckpt_path = model_artifact(st);
  save_checkpoint(trained.model, gsi, ckpt_path);

  Json log = Json::array();
  for (const auto& e : trained.log)
    log.push_back(
        Json{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_f_avg", e.val_f_avg}});
  const std::string log_path = st.out_dir() + "/trainlog_" + st.target() + "_seed" +
                               std::to_string(st.seed()) + ".json";
  save_json_file(log_path, Json{{"best_epoch", trained.best_epoch},
                                {"best_val_f_avg", trained.best_val_f_avg},
                                {"epochs", log}});

  std::vector<std::string> inputs = st.corpus_inputs();
  inputs.push_back(ranking_path);
  st.emit(ckpt_path, "train", inputs);
  st.emit(log_path, "train", inputs);
  std::cerr << "[mrfg] trained " << trained.log.size() << " epochs; best val F_avg "
            << trained.best_val_f_avg << " at epoch " << trained.best_epoch << "\n";
  return 0;
}

int cmd_eval(Stage& st) {
  LoadedPipeline lp = load_pipeline(st, false);
  const std::string eval_target =
      st.cfg.experiment.mode == ExperimentMode::CrossTarget && !st.cfg.experiment.eval_target.empty()
          ? st.cfg.experiment.eval_target
          : st.target();

  const std::string ckpt_path = model_artifact(st);
  if (!fs::exists(ckpt_path))
    throw Error("eval stage: missing checkpoint " + ckpt_path + " (run `mrfg train` first)");
  Checkpoint ckpt = load_checkpoint(ckpt_path);

  Stage eval_stage = st;
  eval_stage.ov.target = eval_target;
  std::vector<User> view = target_view(lp.corpus, eval_target);
  auto retained = retained_from_artifact(eval_stage, lp.corpus, view);
  SocialGraph graph = build_graph(view, lp.corpus.tweets, retained);
  FeatureMatrix features = assemble_feature_matrix(graph, st.cfg.embedder, lp.ctx.table);

  DatasetSplit split = split_dataset(view, TargetId(eval_target), st.seed());
  std::vector<StanceLabel> gold;
  for (const auto& id : split.test) {
    const auto& label = graph.users[graph.node_of_user(id)].label;
    if (!label) throw Error("test user " + id + " has no label");
    gold.push_back(*label);
  }
  std::vector<StanceLabel> predicted = predict(ckpt.model, graph, features.values, split.test);
  MetricReport m = compute_metrics(gold, predicted);

  fs::create_directories(st.out_dir());
  Json confusion = Json::array();
  for (int g = 0; g < kNumClasses; ++g) {
    Json row = Json::array();
    for (int p = 0; p < kNumClasses; ++p) row.push_back(m.confusion[g][p]);
    confusion.push_back(row);
  }
  const std::string path = st.out_dir() + "/eval_" + st.target() + "_to_" + eval_target +
                           "_seed" + std::to_string(st.seed()) + ".json";
  save_json_file(path, Json{{"train_target", st.target()},
                            {"eval_target", eval_target},
                            {"seed", st.seed()},
                            {"f_favor", m.f_favor},
                            {"f_against", m.f_against},
                            {"f_avg", m.f_avg},
                            {"accuracy", m.accuracy},
                            {"n", m.n},
                            {"confusion", confusion}});
  std::vector<std::string> inputs = st.corpus_inputs();
  inputs.push_back(ckpt_path);
  st.emit(path, "eval", inputs);
  std::cerr << "[mrfg] eval " << st.target() << " -> " << eval_target << ": F_avg " << m.f_avg
            << ", acc " << m.accuracy << "\n";
  return 0;
}

int cmd_ablate(Stage& st) {
  LoadedPipeline lp = load_pipeline(st, true);
  ExperimentSpec spec = st.cfg.experiment;
  spec.mode = st.cfg.experiment.mode == ExperimentMode::CrossTarget ? ExperimentMode::CrossTarget
                                                                    : ExperimentMode::Ablation;
  if (!st.ov.target.empty()) {
    spec.train_target = st.ov.target;
    if (spec.mode != ExperimentMode::CrossTarget) spec.eval_target = st.ov.target;
  }
  ExperimentResult result = run_experiment(spec, lp.ctx);
  if (lp.ctx.cache) lp.cache.flush();

  fs::create_directories(st.out_dir());
  const std::string path =
      st.out_dir() + "/ablation_" + to_string(spec.variant) + "_" + spec.train_target + ".json";
  save_experiment_result(result, path);
  st.emit(path, "ablate", st.corpus_inputs());
  std::cerr << "[mrfg] " << to_string(spec.variant) << " mean F_avg " << result.mean.f_avg
            << "\n";
  return 0;
}

int cmd_sweep(Stage& st) {
  LoadedPipeline lp = load_pipeline(st, true);
  ExperimentSpec spec = st.cfg.experiment;
  spec.mode = ExperimentMode::Sweep;
  if (!st.ov.target.empty()) {
    spec.train_target = st.ov.target;
    spec.eval_target = st.ov.target;
  }

  std::unique_ptr<ChatClient> mock_client;
  std::unique_ptr<ChatClient> http_client;
  std::map<FilterStrategy, ChatClient*> clients;
  for (FilterStrategy s : st.cfg.sweep_strategies) {
    if (s == FilterStrategy::Mock) {
      if (st.cfg.mock_script_path.empty())
        throw Error("sweep stage: strategy mock needs paths.mock_script");
      mock_client = std::make_unique<ScriptedChatClient>(
          ScriptedChatClient::load(st.cfg.mock_script_path));
      clients[s] = mock_client.get();
    } else if (s == FilterStrategy::Llm) {
      http_client = std::make_unique<HttpChatClient>(st.cfg.endpoint);
      clients[s] = http_client.get();
    }
  }

  std::vector<SweepPoint> points = run_sweep(spec, lp.ctx, st.cfg.sweep_strategies, clients);
  if (lp.ctx.cache) lp.cache.flush();

  fs::create_directories(st.out_dir());
  const std::string path = st.out_dir() + "/sweep_" + spec.train_target + ".csv";
  save_sweep_csv(points, path);
  st.emit(path, "sweep", st.corpus_inputs());
  std::cerr << "[mrfg] sweep wrote " << points.size() << " points\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MRFG stance pipeline"};
  app.require_subcommand(1);

  CliOverrides ov;
  app.add_option("--config", ov.config_path, "pipeline config file")->required();
  app.add_option("--seed", ov.seed, "seed override");
  app.add_option("--target", ov.target, "stance target override");
  app.add_option("--r", ov.r, "feature selection ratio override");
  app.add_option("--variant", ov.variant, "experiment variant override");
  app.add_option("--strategy", ov.strategy, "filter strategy override");
  app.add_option("--out", ov.out_dir, "output directory override");

  auto* c_synth = app.add_subcommand("synth", "generate a synthetic corpus");
  auto* c_ingest = app.add_subcommand("ingest", "validate corpus, stats, splits");
  auto* c_filter = app.add_subcommand("filter", "score and filter followee tweets");
  auto* c_rank = app.add_subcommand("rank", "compute the feature informativeness ranking");
  auto* c_train = app.add_subcommand("train", "train the dual-path model");
  auto* c_eval = app.add_subcommand("eval", "evaluate a trained checkpoint");
  auto* c_ablate = app.add_subcommand("ablate", "run an ablation variant end to end");
  auto* c_sweep = app.add_subcommand("sweep", "sweep the feature selection ratio");

  CLI11_PARSE(app, argc, argv);

  try {
    Stage st{apply_overrides(PipelineConfig::load(ov.config_path), ov), ov, {}};
    int rc = 1;
    if (c_synth->parsed()) rc = cmd_synth(st);
    else if (c_ingest->parsed()) rc = cmd_ingest(st);
    else if (c_filter->parsed()) rc = cmd_filter(st);
    else if (c_rank->parsed()) rc = cmd_rank(st);
    else if (c_train->parsed()) rc = cmd_train(st);
    else if (c_eval->parsed()) rc = cmd_eval(st);
    else if (c_ablate->parsed()) rc = cmd_ablate(st);
    else if (c_sweep->parsed()) rc = cmd_sweep(st);

    Json summary{{"ok", rc == 0}, {"artifacts", st.artifacts}};
    std::cout << summary.dump() << "\n";
    return rc;
  } catch (const std::exception& e) {
    std::cerr << "[mrfg] error: " << e.what() << "\n";
    std::cout << Json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
}
