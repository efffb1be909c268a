#include "mrfg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "mrfg/graph.hpp"
#include "mrfg/jsonl.hpp"
#include "mrfg/relevance.hpp"
#include "mrfg/rng.hpp"
#include "mrfg/tfi.hpp"

namespace mrfg {

namespace {

// Shared topic direction gives user/tweet vectors common mass so cosine
// relevance filtering separates on-topic from off-topic; being
// label-independent it cancels out of every mutual-information score.
constexpr double kTopicAmplitude = 6.0;
// Per-node noise on graph dims; large enough that single nodes are weak
// votes and only neighborhood averages read cleanly.
constexpr double kStructuralNoise = 2.4;
// Chatter amplitude on tweet content dims; propagation drowns content
// signal in it, which is what penalizes routing content dims to the
// graph path.
constexpr double kChatterAmplitude = 2.0;
// Share of users whose own content is stance-silent, scaled by noise.
constexpr double kReticentSlope = 0.8;
constexpr double kReticentCap = 0.8;

const char* kFavorWords[] = {"support", "endorse", "backing", "great", "hope", "proud"};
const char* kAgainstWords[] = {"oppose", "reject", "against", "bad", "angry", "never"};
const char* kNoneWords[] = {"watching", "thinking", "news", "maybe", "question", "today"};
const char* kSaladWords[] = {"pasta", "umbrella", "guitar", "nebula", "recipe", "bicycle",
                             "harbor", "pixel", "walnut", "meadow", "cobalt", "lantern"};

std::string label_phrase(StanceLabel l, Rng& rng) {
  auto pick = [&](const char* const* words, size_t n) { return words[rng.below(n)]; };
  switch (l) {
    case StanceLabel::Favor: return std::string(pick(kFavorWords, 6)) + " " + pick(kFavorWords, 6);
    case StanceLabel::Against:
      return std::string(pick(kAgainstWords, 6)) + " " + pick(kAgainstWords, 6);
    case StanceLabel::None: return std::string(pick(kNoneWords, 6)) + " " + pick(kNoneWords, 6);
  }
  return "";
}

std::string salad(Rng& rng, size_t n_words) {
  std::string out;
  for (size_t i = 0; i < n_words; ++i) {
    if (i) out += " ";
    out += kSaladWords[rng.below(12)];
  }
  return out;
}

std::string pad_index(size_t i, size_t width) {
  std::string s = std::to_string(i);
  return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_users < 4) throw Error("n_users must be >= 4");
  if (homophily < 0.0 || homophily > 1.0) throw Error("homophily must lie in [0,1]");
  if (relevance_noise < 0.0 || relevance_noise > 1.0)
    throw Error("relevance_noise must lie in [0,1]");
  if (noise_level < 0.0) throw Error("noise_level must be >= 0");
  if (dim < 8) throw Error("dim must be >= 8");
  double total = 0.0;
  for (double p : label_distribution) {
    if (p < 0.0) throw Error("label distribution entries must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("label distribution must sum to 1");
  if (tweets_per_user[0] > tweets_per_user[1]) throw Error("bad tweets_per_user range");
  if (followees_per_user[0] > followees_per_user[1]) throw Error("bad followees_per_user range");
  if (followees_per_user[1] > n_users - 1)
    throw Error("infeasible followee range: max " + std::to_string(followees_per_user[1]) +
                " followees with " + std::to_string(n_users) + " users");
  if (graph_dim_fraction <= 0.0 || graph_dim_fraction >= 1.0)
    throw Error("graph_dim_fraction must lie in (0,1)");
}

GeneratedCorpus generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  GeneratedCorpus gen;
  gen.spec = spec;

  const size_t width = std::to_string(spec.n_users - 1).size();
  const size_t n = spec.n_users;

  // Labels.
  std::vector<StanceLabel> labels(n);
  for (size_t i = 0; i < n; ++i) {
    const double x = rng.uniform();
    if (x < spec.label_distribution[0]) labels[i] = StanceLabel::Favor;
    else if (x < spec.label_distribution[0] + spec.label_distribution[1])
      labels[i] = StanceLabel::Against;
    else labels[i] = StanceLabel::None;
  }
  std::array<std::vector<size_t>, kNumClasses> by_class;
  for (size_t i = 0; i < n; ++i) by_class[class_index(labels[i])].push_back(i);

  // Follow edges: with probability homophily pick a same-label user,
  // otherwise a different-label user. Both branches draw from their own
  // pool so the realized same-label fraction tracks the knob.
  std::array<std::vector<size_t>, kNumClasses> not_class;
  for (size_t i = 0; i < n; ++i)
    for (int c = 0; c < kNumClasses; ++c)
      if (c != class_index(labels[i])) not_class[c].push_back(i);

  std::vector<std::vector<size_t>> followees(n);
  for (size_t i = 0; i < n; ++i) {
    const size_t want = static_cast<size_t>(
        rng.range_int(static_cast<int>(spec.followees_per_user[0]),
                      static_cast<int>(spec.followees_per_user[1])));
    std::vector<uint8_t> taken(n, 0);
    taken[i] = 1;
    size_t attempts = 0;
    while (followees[i].size() < want && attempts < want * 20 + 50) {
      ++attempts;
      const bool same = rng.uniform() < spec.homophily;
      const auto& pool = same ? by_class[class_index(labels[i])] : not_class[class_index(labels[i])];
      if (pool.empty()) continue;
      const size_t j = pool[rng.below(pool.size())];
      if (taken[j]) continue;
      taken[j] = 1;
      followees[i].push_back(j);
    }
    std::sort(followees[i].begin(), followees[i].end());
  }

  // Planted dimension split and per-dim class signatures in {-1,0,+1}.
  std::vector<size_t> dims(spec.dim);
  std::iota(dims.begin(), dims.end(), 0);
  rng.shuffle(dims);
  const size_t n_graph = std::max<size_t>(1, std::llround(spec.graph_dim_fraction * spec.dim));
  gen.graph_dims.assign(dims.begin(), dims.begin() + n_graph);
  gen.content_dims.assign(dims.begin() + n_graph, dims.end());
  std::sort(gen.graph_dims.begin(), gen.graph_dims.end());
  std::sort(gen.content_dims.begin(), gen.content_dims.end());
  std::vector<uint8_t> is_graph_dim(spec.dim, 0);
  for (size_t d : gen.graph_dims) is_graph_dim[d] = 1;

  Matrix signature(spec.dim, kNumClasses);
  const double sig_values[kNumClasses] = {-1.0, 0.0, 1.0};
  for (size_t m = 0; m < spec.dim; ++m) {
    std::vector<size_t> perm{0, 1, 2};
    rng.shuffle(perm);
    for (int c = 0; c < kNumClasses; ++c) signature(m, c) = sig_values[perm[c]];
  }

  std::vector<double> topic(spec.dim);
  for (auto& v : topic) v = rng.uniform() < 0.5 ? -1.0 : 1.0;

  // Majority label of followees; own label when there are none or a tie.
  auto majority_label = [&](size_t i) {
    std::array<size_t, kNumClasses> counts{};
    for (size_t f : followees[i]) counts[class_index(labels[f])] += 1;
    const size_t best = *std::max_element(counts.begin(), counts.end());
    if (best == 0) return labels[i];
    int winner = -1;
    for (int c = 0; c < kNumClasses; ++c) {
      if (counts[c] == best) {
        if (winner >= 0) return labels[i];  // tie
        winner = c;
      }
    }
    return label_from_index(winner);
  };

  const double reticent_share = std::min(kReticentCap, kReticentSlope * spec.noise_level);
  const double graph_noise = kStructuralNoise * (1.0 + spec.noise_level);

  auto node_vector = [&](StanceLabel graph_label, StanceLabel content_label,
                         bool tweet_node) {
    std::vector<double> v(spec.dim);
    for (size_t m = 0; m < spec.dim; ++m) {
      double x = kTopicAmplitude * topic[m];
      if (is_graph_dim[m]) {
        x += signature(m, class_index(graph_label)) + graph_noise * rng.normal();
      } else if (tweet_node) {
        x += kChatterAmplitude * rng.normal();
      } else {
        x += signature(m, class_index(content_label)) + spec.noise_level * rng.normal();
      }
      v[m] = x;
    }
    return v;
  };

  auto off_topic_vector = [&]() {
    std::vector<double> v(spec.dim);
    for (auto& x : v) x = kTopicAmplitude * rng.normal();
    return v;
  };

  // Users, tweets, vectors, texts.
  for (size_t i = 0; i < n; ++i) {
    User u;
    u.id = "u" + pad_index(i, width);
    u.target = TargetId(spec.target);
    u.label = labels[i];
    const bool reticent = rng.uniform() < reticent_share;
    const StanceLabel content_label = reticent ? StanceLabel::None : labels[i];
    const StanceLabel maj = majority_label(i);

    u.description = "user " + u.id + " " + label_phrase(content_label, rng) + " " + spec.target;
    gen.embeddings.insert(u.id, node_vector(maj, content_label, false));

    const size_t n_tweets = static_cast<size_t>(
        rng.range_int(static_cast<int>(spec.tweets_per_user[0]),
                      static_cast<int>(spec.tweets_per_user[1])));
    for (size_t k = 0; k < n_tweets; ++k) {
      Tweet t;
      t.id = "t" + pad_index(i, width) + "_" + std::to_string(k);
      t.author_id = u.id;
      const bool off_topic = rng.uniform() < spec.relevance_noise;
      gen.tweet_on_topic[t.id] = !off_topic;
      if (off_topic) {
        t.text = salad(rng, 8);
        gen.embeddings.insert(t.id, off_topic_vector());
      } else {
        t.text = "user " + u.id + " " + label_phrase(content_label, rng) + " " + spec.target +
                 " " + salad(rng, 2);
        gen.embeddings.insert(t.id, node_vector(labels[i], labels[i], true));
      }
      u.tweet_ids.push_back(t.id);
      gen.corpus.tweets.push_back(std::move(t));
    }
    for (size_t f : followees[i]) u.followee_ids.push_back("u" + pad_index(f, width));
    gen.corpus.users.push_back(std::move(u));
  }

  // Roles, matching the loader's derivation.
  std::unordered_map<std::string, bool> has_incoming;
  for (const auto& u : gen.corpus.users)
    for (const auto& f : u.followee_ids) has_incoming[f] = true;
  for (auto& u : gen.corpus.users) {
    if (has_incoming.count(u.id)) u.role = UserRole::Followee;
    else if (!u.followee_ids.empty()) u.role = UserRole::Follower;
    else u.role = UserRole::Isolated;
  }
  return gen;
}

ScriptedChatClient make_mock_script(const GeneratedCorpus& gen, size_t max_tweets_per_prompt) {
  ScriptedChatClient script;
  std::unordered_map<std::string, const User*> users_by_id;
  std::unordered_map<std::string, const Tweet*> tweets_by_id;
  for (const auto& u : gen.corpus.users) users_by_id.emplace(u.id, &u);
  for (const auto& t : gen.corpus.tweets) tweets_by_id.emplace(t.id, &t);

  for (const auto& u : gen.corpus.users) {
    std::vector<Tweet> followee_tweets;
    for (const auto& fid : u.followee_ids) {
      const User* f = users_by_id.at(fid);
      for (const auto& tid : f->tweet_ids) followee_tweets.push_back(*tweets_by_id.at(tid));
    }
    if (followee_tweets.empty()) continue;

    std::vector<Tweet> own;
    for (const auto& tid : u.tweet_ids) own.push_back(*tweets_by_id.at(tid));

    for (const auto& chunk : build_prompts(u, own, followee_tweets, max_tweets_per_prompt)) {
      std::vector<std::pair<std::string, int>> pairs;
      for (const auto& [key, tweet_id] : chunk.keys)
        pairs.emplace_back(key, gen.tweet_on_topic.at(tweet_id) ? 3 : 1);
      script.add(chunk.request_key, render_score_pairs(pairs));
    }
  }
  return script;
}

SynthPaths synth_paths(const std::string& dir) {
  return SynthPaths{dir + "/users.jsonl",      dir + "/tweets.jsonl",
                    dir + "/edges.jsonl",      dir + "/embeddings.jsonl",
                    dir + "/planted.json",     dir + "/mock_script.jsonl"};
}

void write_generated(const GeneratedCorpus& gen, const std::string& dir,
                     size_t max_tweets_per_prompt) {
  std::filesystem::create_directories(dir);
  const SynthPaths paths = synth_paths(dir);
  save_corpus(gen.corpus, paths.users, paths.tweets, paths.edges);
  gen.embeddings.save(paths.embeddings);

  Json spec_json{{"n_users", gen.spec.n_users},
                 {"tweets_per_user", gen.spec.tweets_per_user},
                 {"followees_per_user", gen.spec.followees_per_user},
                 {"homophily", gen.spec.homophily},
                 {"label_distribution", gen.spec.label_distribution},
                 {"dim", gen.spec.dim},
                 {"graph_dim_fraction", gen.spec.graph_dim_fraction},
                 {"noise_level", gen.spec.noise_level},
                 {"relevance_noise", gen.spec.relevance_noise},
                 {"seed", gen.spec.seed},
                 {"target", gen.spec.target}};
  std::map<std::string, bool> on_topic(gen.tweet_on_topic.begin(), gen.tweet_on_topic.end());
  save_json_file(paths.planted, Json{{"graph_dims", gen.graph_dims},
                                     {"content_dims", gen.content_dims},
                                     {"tweet_on_topic", on_topic},
                                     {"spec", spec_json}});
  make_mock_script(gen, max_tweets_per_prompt).save(paths.mock_script);
}

PlantedTfiReport planted_tfi_check(const GeneratedCorpus& gen, size_t bins, uint64_t split_seed) {
  if (gen.graph_dims.size() * 5 < gen.spec.dim)
    throw Error("planted_tfi_check needs >= 20% graph-informative dims");

  std::unordered_map<std::string, const User*> users_by_id;
  std::unordered_map<std::string, const Tweet*> tweets_by_id;
  for (const auto& u : gen.corpus.users) users_by_id.emplace(u.id, &u);
  for (const auto& t : gen.corpus.tweets) tweets_by_id.emplace(t.id, &t);

  // Ground-truth relevance filtering.
  std::map<std::string, std::vector<Tweet>> retained;
  for (const auto& u : gen.corpus.users) {
    std::vector<Tweet> keep;
    for (const auto& fid : u.followee_ids) {
      for (const auto& tid : users_by_id.at(fid)->tweet_ids)
        if (gen.tweet_on_topic.at(tid)) keep.push_back(*tweets_by_id.at(tid));
    }
    if (!keep.empty()) retained.emplace(u.id, std::move(keep));
  }

  SocialGraph graph = build_graph(gen.corpus.users, gen.corpus.tweets, retained);
  EmbedderSpec espec;
  espec.kind = EmbedderKind::External;
  espec.dim = gen.spec.dim;
  espec.path = "<in-memory>";
  FeatureMatrix features = assemble_feature_matrix(graph, espec, &gen.embeddings);

  DatasetSplit split = split_dataset(gen.corpus.users, TargetId(gen.spec.target), split_seed);
  std::vector<size_t> train_idx;
  for (const auto& id : split.train) train_idx.push_back(graph.node_of_user(id));
  std::vector<std::optional<StanceLabel>> labels;
  for (const auto& u : graph.users) labels.push_back(u.label);

  FmiRanking ranking = rank_tfi(graph, features.values, labels, train_idx, bins);

  PlantedTfiReport report;
  report.scores = ranking.scores;
  report.max_score = *std::max_element(ranking.scores.begin(), ranking.scores.end());
  report.min_score = *std::min_element(ranking.scores.begin(), ranking.scores.end());

  std::vector<uint8_t> planted(gen.spec.dim, 0);
  for (size_t d : gen.graph_dims) planted[d] = 1;
  size_t hits = 0;
  for (size_t i = 0; i < gen.graph_dims.size(); ++i)
    if (planted[ranking.order[i]]) ++hits;
  report.recovery_fraction =
      static_cast<double>(hits) / static_cast<double>(gen.graph_dims.size());
  return report;
}

}  // namespace mrfg
