#include "mrfg/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "mrfg/jsonl.hpp"

namespace mrfg {

namespace {

std::string trim_copy(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim_copy(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!trim_copy(cur).empty() || !out.empty()) out.push_back(trim_copy(cur));
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

}  // namespace

IniFile IniFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

IniFile IniFile::parse(const std::string& text) {
  IniFile ini;
  std::istringstream in(text);
  std::string line, section;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim_copy(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim_copy(t.substr(1, t.size() - 2));
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw Error("config line " + std::to_string(lineno) + " is not key = value");
    ini.sections_[section][trim_copy(t.substr(0, eq))] = trim_copy(t.substr(eq + 1));
  }
  return ini;
}

bool IniFile::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string IniFile::get(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

double IniFile::get_double(const std::string& section, const std::string& key,
                           double fallback) const {
  if (!has(section, key)) return fallback;
  return std::stod(get(section, key, ""));
}

int64_t IniFile::get_int(const std::string& section, const std::string& key,
                         int64_t fallback) const {
  if (!has(section, key)) return fallback;
  return std::stoll(get(section, key, ""));
}

bool IniFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key, "");
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error("config value " + section + "." + key + " is not a boolean: " + v);
}

std::vector<double> IniFile::get_doubles(const std::string& section, const std::string& key,
                                         const std::vector<double>& fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(get(section, key, ""))) out.push_back(std::stod(item));
  return out;
}

std::vector<uint64_t> IniFile::get_u64s(const std::string& section, const std::string& key,
                                        const std::vector<uint64_t>& fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<uint64_t> out;
  for (const auto& item : split_list(get(section, key, ""))) out.push_back(std::stoull(item));
  return out;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  IniFile ini = IniFile::load(path);
  PipelineConfig cfg;

  cfg.users_path = ini.get("paths", "users", "");
  cfg.tweets_path = ini.get("paths", "tweets", "");
  cfg.edges_path = ini.get("paths", "edges", "");
  cfg.embeddings_path = ini.get("paths", "embeddings", "");
  cfg.cache_path = ini.get("paths", "cache", "");
  cfg.mock_script_path = ini.get("paths", "mock_script", "");
  cfg.out_dir = ini.get("paths", "out_dir", "out");

  const std::string kind = ini.get("embedder", "kind", "hashing");
  if (kind == "hashing") cfg.embedder.kind = EmbedderKind::Hashing;
  else if (kind == "external") cfg.embedder.kind = EmbedderKind::External;
  else throw Error("unknown embedder kind " + kind);
  cfg.embedder.dim = static_cast<size_t>(
      ini.get_int("embedder", "dim", kind == "external" ? 768 : 256));
  cfg.embedder.seed = static_cast<uint64_t>(ini.get_int("embedder", "seed", 0));
  cfg.embedder.path = cfg.embeddings_path;

  cfg.strategy = strategy_from_string(ini.get("filter", "strategy", "off"));
  cfg.endpoint.base_url = ini.get("endpoint", "base_url", cfg.endpoint.base_url);
  cfg.endpoint.model = ini.get("endpoint", "model", cfg.endpoint.model);
  cfg.endpoint.api_key_env = ini.get("endpoint", "api_key_env", cfg.endpoint.api_key_env);
  cfg.endpoint.max_retries = static_cast<int>(ini.get_int("endpoint", "max_retries", 3));
  cfg.endpoint.timeout_seconds = ini.get_double("endpoint", "timeout_seconds", 30.0);
  cfg.endpoint.temperature = ini.get_double("endpoint", "temperature", 0.0);
  cfg.endpoint.max_tweets_per_prompt =
      static_cast<size_t>(ini.get_int("filter", "max_tweets_per_prompt", 25));
  cfg.endpoint.parallel_requests =
      static_cast<int>(ini.get_int("filter", "parallel_requests", 1));

  cfg.tfi_bins = static_cast<size_t>(ini.get_int("tfi", "bins", 16));

  cfg.gsi.r = ini.get_double("gsi", "r", 0.3);
  cfg.gsi.hidden_dim = static_cast<size_t>(ini.get_int("gsi", "hidden_dim", 64));
  cfg.gsi.learning_rate = ini.get_double("gsi", "learning_rate", 1e-3);
  cfg.gsi.epochs = static_cast<size_t>(ini.get_int("gsi", "epochs", 200));
  cfg.gsi.patience = static_cast<size_t>(ini.get_int("gsi", "patience", 20));
  cfg.gsi.seed = static_cast<uint64_t>(ini.get_int("gsi", "seed", 0));
  cfg.gsi.relu_last_rgcn_layer = ini.get_bool("gsi", "relu_last_rgcn_layer", false);
  cfg.gsi.class_weighting = ini.get_bool("gsi", "class_weighting", false);

  const std::string mode = ini.get("experiment", "mode", "in_target");
  if (mode == "in_target") cfg.experiment.mode = ExperimentMode::InTarget;
  else if (mode == "cross_target") cfg.experiment.mode = ExperimentMode::CrossTarget;
  else if (mode == "ablation") cfg.experiment.mode = ExperimentMode::Ablation;
  else if (mode == "sweep") cfg.experiment.mode = ExperimentMode::Sweep;
  else throw Error("unknown experiment mode " + mode);
  cfg.experiment.variant = variant_from_string(ini.get("experiment", "variant", "full"));
  cfg.experiment.train_target = ini.get("experiment", "train_target", "");
  cfg.experiment.eval_target =
      ini.get("experiment", "eval_target", cfg.experiment.train_target);
  cfg.experiment.seeds = ini.get_u64s("experiment", "seeds", {0, 1, 2});
  cfg.experiment.r_values = ini.get_doubles("experiment", "r_values",
                                            {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
  if (ini.has("experiment", "sweep_strategies")) {
    cfg.sweep_strategies.clear();
    for (const auto& item : split_list(ini.get("experiment", "sweep_strategies", "")))
      cfg.sweep_strategies.push_back(strategy_from_string(item));
  }

  cfg.synth.n_users = static_cast<size_t>(ini.get_int("synth", "n_users", 200));
  {
    auto tw = ini.get_doubles("synth", "tweets_per_user", {1, 3});
    auto fo = ini.get_doubles("synth", "followees_per_user", {2, 5});
    if (tw.size() != 2 || fo.size() != 2) throw Error("synth ranges need two values");
    cfg.synth.tweets_per_user = {static_cast<size_t>(tw[0]), static_cast<size_t>(tw[1])};
    cfg.synth.followees_per_user = {static_cast<size_t>(fo[0]), static_cast<size_t>(fo[1])};
  }
  cfg.synth.homophily = ini.get_double("synth", "homophily", 0.9);
  {
    auto dist = ini.get_doubles("synth", "label_distribution", {0.4, 0.4, 0.2});
    if (dist.size() != 3) throw Error("label_distribution needs three values");
    cfg.synth.label_distribution = {dist[0], dist[1], dist[2]};
  }
  cfg.synth.dim = static_cast<size_t>(ini.get_int("synth", "dim", 128));
  cfg.synth.graph_dim_fraction = ini.get_double("synth", "graph_dim_fraction", 0.3);
  cfg.synth.noise_level = ini.get_double("synth", "noise_level", 0.5);
  cfg.synth.relevance_noise = ini.get_double("synth", "relevance_noise", 0.0);
  cfg.synth.seed = static_cast<uint64_t>(ini.get_int("synth", "seed", 0));
  cfg.synth.target = ini.get("synth", "target", "synthetic");
  cfg.synth_dir = ini.get("synth", "out", "synth");

  std::ifstream raw(path, std::ios::binary);
  std::stringstream buf;
  buf << raw.rdbuf();
  cfg.config_hash = fnv1a64_bytes(buf.str());
  return cfg;
}

uint64_t fnv1a64_bytes(const std::string& bytes) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot hash missing file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a64_bytes(buf.str())));
  return hex;
}

void write_manifest(const std::string& artifact_path, const std::string& command,
                    uint64_t config_hash, const std::vector<std::string>& input_paths,
                    uint64_t seed) {
  Json inputs = Json::object();
  for (const auto& p : input_paths) inputs[p] = hash_file(p);
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(config_hash));
  save_json_file(artifact_path + ".manifest.json", Json{{"command", command},
                                                        {"config_hash", hex},
                                                        {"input_hashes", inputs},
                                                        {"seed", seed}});
}

}  // namespace mrfg
