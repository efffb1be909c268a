#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "doctest.h"
#include "mrfg/config.hpp"
#include "mrfg/jsonl.hpp"

using namespace mrfg;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  namespace fs = std::filesystem;
  const std::string path =
      (fs::temp_directory_path() / (name + "_" + std::to_string(::getpid()))).string();
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("ini parsing covers sections, comments, and typed getters") {
  IniFile ini = IniFile::parse(
      "# comment\n"
      "[paths]\n"
      "users = data/users.jsonl\n"
      "\n"
      "[gsi]\n"
      "r = 0.4\n"
      "hidden_dim = 32\n"
      "relu_last_rgcn_layer = true\n"
      "; another comment\n"
      "[experiment]\n"
      "seeds = 3, 5, 8\n"
      "r_values = 0.1, 0.2\n");
  CHECK(ini.get("paths", "users", "") == "data/users.jsonl");
  CHECK(ini.get_double("gsi", "r", 0.0) == 0.4);
  CHECK(ini.get_int("gsi", "hidden_dim", 0) == 32);
  CHECK(ini.get_bool("gsi", "relu_last_rgcn_layer", false));
  CHECK(ini.get_u64s("experiment", "seeds", {}) == std::vector<uint64_t>{3, 5, 8});
  CHECK(ini.get_doubles("experiment", "r_values", {}) == std::vector<double>{0.1, 0.2});
  CHECK(ini.get("missing", "key", "fallback") == "fallback");
  CHECK_THROWS_AS(IniFile::parse("just a line\n"), Error);
  CHECK_THROWS_AS(ini.get_bool("paths", "users", false), Error);
}

TEST_CASE("pipeline config loads with defaults and validates enums") {
  const std::string path = write_temp(
      "mrfg_cfg.ini",
      "[paths]\n"
      "users = u.jsonl\n"
      "tweets = t.jsonl\n"
      "edges = e.jsonl\n"
      "out_dir = outputs\n"
      "[embedder]\n"
      "kind = external\n"
      "dim = 32\n"
      "[filter]\n"
      "strategy = mock\n"
      "max_tweets_per_prompt = 10\n"
      "[gsi]\n"
      "r = 0.25\n"
      "[experiment]\n"
      "train_target = synthetic\n"
      "seeds = 0,1\n");
  PipelineConfig cfg = PipelineConfig::load(path);
  CHECK(cfg.users_path == "u.jsonl");
  CHECK(cfg.out_dir == "outputs");
  CHECK(cfg.embedder.kind == EmbedderKind::External);
  CHECK(cfg.embedder.dim == 32);
  CHECK(cfg.strategy == FilterStrategy::Mock);
  CHECK(cfg.endpoint.max_tweets_per_prompt == 10);
  CHECK(cfg.gsi.r == 0.25);
  CHECK(cfg.gsi.hidden_dim == 64);  // default
  CHECK(cfg.experiment.train_target == "synthetic");
  CHECK(cfg.experiment.eval_target == "synthetic");
  CHECK(cfg.experiment.seeds == std::vector<uint64_t>{0, 1});
  CHECK(cfg.config_hash != 0);
  std::filesystem::remove(path);

  const std::string bad = write_temp("mrfg_bad.ini", "[filter]\nstrategy = telepathy\n");
  CHECK_THROWS_WITH_AS(PipelineConfig::load(bad), doctest::Contains("unknown filter strategy"),
                       Error);
  std::filesystem::remove(bad);
}

TEST_CASE("manifests record command, config hash, inputs, seed") {
  const std::string input = write_temp("mrfg_input.txt", "stable bytes\n");
  const std::string artifact = write_temp("mrfg_artifact.json", "{}\n");
  write_manifest(artifact, "rank", 0xabcdef, {input}, 7);

  Json manifest = load_json_file(artifact + ".manifest.json");
  CHECK(manifest.at("command") == "rank");
  CHECK(manifest.at("seed") == 7);
  CHECK(manifest.at("config_hash") == "0000000000abcdef");
  CHECK(manifest.at("input_hashes").size() == 1);
  const std::string h1 = manifest.at("input_hashes").at(input).get<std::string>();
  CHECK(h1 == hash_file(input));

  // Hashes are content hashes: same content, same hash.
  const std::string copy = write_temp("mrfg_input_copy.txt", "stable bytes\n");
  CHECK(hash_file(copy) == h1);
  CHECK_THROWS_AS(hash_file("/nonexistent/file"), Error);

  std::filesystem::remove(input);
  std::filesystem::remove(copy);
  std::filesystem::remove(artifact);
  std::filesystem::remove(artifact + ".manifest.json");
}
