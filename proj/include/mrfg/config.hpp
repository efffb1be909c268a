#pragma once
// Pipeline configuration: one INI-style file with sections, plus flag
// overrides from the CLI. Artifacts get a manifest recording the
// command, config hash, input hashes, and seed next to them.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mrfg/chat_client.hpp"
#include "mrfg/embed.hpp"
#include "mrfg/experiment.hpp"
#include "mrfg/gsi.hpp"
#include "mrfg/synth.hpp"

namespace mrfg {

class IniFile {
 public:
  static IniFile load(const std::string& path);
  static IniFile parse(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int64_t get_int(const std::string& section, const std::string& key, int64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<uint64_t> get_u64s(const std::string& section, const std::string& key,
                                 const std::vector<uint64_t>& fallback) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

struct PipelineConfig {
  // [paths]
  std::string users_path, tweets_path, edges_path;
  std::string embeddings_path;  // external embedder table
  std::string cache_path;
  std::string mock_script_path;
  std::string out_dir = "out";

  EmbedderSpec embedder;
  FilterStrategy strategy = FilterStrategy::Off;
  LlmEndpointConfig endpoint;
  size_t tfi_bins = 16;
  GsiConfig gsi;
  ExperimentSpec experiment;
  std::vector<FilterStrategy> sweep_strategies{FilterStrategy::Mock, FilterStrategy::Cosine};
  SynthSpec synth;
  std::string synth_dir = "synth";

  uint64_t config_hash = 0;

  static PipelineConfig load(const std::string& path);
};

uint64_t fnv1a64_bytes(const std::string& bytes);
std::string hash_file(const std::string& path);  // hex fnv-1a of contents

void write_manifest(const std::string& artifact_path, const std::string& command,
                    uint64_t config_hash, const std::vector<std::string>& input_paths,
                    uint64_t seed);

}  // namespace mrfg
