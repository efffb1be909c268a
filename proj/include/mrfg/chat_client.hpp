#pragma once
// Chat-completions clients. HttpChatClient speaks the OpenAI-compatible
// wire shape (POST <base_url>/chat/completions) with retry and backoff;
// ScriptedChatClient replays canned responses keyed by request key, so
// the whole prompt/parse path can run hermetically.

#include <map>
#include <memory>
#include <string>

#include "mrfg/core.hpp"

namespace mrfg {

struct LlmEndpointConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  std::string api_key_env = "OPENAI_API_KEY";
  int max_retries = 3;
  double timeout_seconds = 30.0;
  size_t max_tweets_per_prompt = 25;
  double temperature = 0.0;
  int parallel_requests = 1;

  void validate() const {
    if (max_retries < 0) throw Error("max_retries must be >= 0");
    if (timeout_seconds <= 0) throw Error("timeout must be > 0");
    if (max_tweets_per_prompt == 0) throw Error("max_tweets_per_prompt must be > 0");
    if (parallel_requests < 1) throw Error("parallel_requests must be >= 1");
  }
};

struct ChatRequest {
  std::string key;  // stable identifier, e.g. "<user_id>#<chunk>"
  std::string prompt;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(LlmEndpointConfig config);
  std::string complete(const ChatRequest& request) override;

 private:
  LlmEndpointConfig config_;
  std::string api_key_;
};

class ScriptedChatClient : public ChatClient {
 public:
  ScriptedChatClient() = default;
  // File format: one JSON object {"key", "response"} per line.
  static ScriptedChatClient load(const std::string& path);

  void add(const std::string& key, const std::string& response) { script_[key] = response; }
  void save(const std::string& path) const;
  std::string complete(const ChatRequest& request) override;

 private:
  std::map<std::string, std::string> script_;
};

}  // namespace mrfg
