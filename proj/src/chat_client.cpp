#include "mrfg/chat_client.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#ifdef MRFG_HTTPS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

#include "mrfg/jsonl.hpp"

namespace mrfg {

namespace {

// Splits "https://host:port/prefix" into client base and path prefix.
struct ParsedUrl {
  std::string host_part;  // scheme://host[:port]
  std::string prefix;     // possibly empty, no trailing slash
};

ParsedUrl parse_base_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error("base_url needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl p;
  if (path_start == std::string::npos) {
    p.host_part = url;
  } else {
    p.host_part = url.substr(0, path_start);
    p.prefix = url.substr(path_start);
    while (!p.prefix.empty() && p.prefix.back() == '/') p.prefix.pop_back();
  }
  return p;
}

bool retryable_status(int status) {
  return status == 408 || status == 429 || status >= 500;
}

}  // namespace

HttpChatClient::HttpChatClient(LlmEndpointConfig config) : config_(std::move(config)) {
  config_.validate();
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key) api_key_ = key;
  }
}

std::string HttpChatClient::complete(const ChatRequest& request) {
  const ParsedUrl url = parse_base_url(config_.base_url);
  const std::string path = url.prefix + "/chat/completions";
  const Json body{{"model", config_.model},
                  {"temperature", config_.temperature},
                  {"messages", Json::array({Json{{"role", "user"}, {"content", request.prompt}}})}};
  const std::string payload = body.dump();

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      double delay = std::min(0.5 * static_cast<double>(1 << (attempt - 1)), 8.0);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }

    httplib::Client cli(url.host_part);
    cli.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    cli.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto res = cli.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "connection error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      Json parsed;
      try {
        parsed = Json::parse(res->body);
        return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const Json::exception& e) {
        throw Error("malformed chat response for " + request.key + ": " + e.what());
      }
    }
    last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500);
    if (!retryable_status(res->status)) break;
  }
  throw Error("chat request " + request.key + " failed after retries; last: " + last_error);
}

ScriptedChatClient ScriptedChatClient::load(const std::string& path) {
  ScriptedChatClient c;
  for_each_jsonl(path, [&](const Json& rec, size_t lineno) {
    if (!rec.contains("key") || !rec.contains("response"))
      throw Error("malformed script record at line " + std::to_string(lineno));
    c.script_[rec["key"].get<std::string>()] = rec["response"].get<std::string>();
  });
  return c;
}

void ScriptedChatClient::save(const std::string& path) const {
  JsonlWriter out(path);
  for (const auto& [key, response] : script_)
    out.write(Json{{"key", key}, {"response", response}});
}

std::string ScriptedChatClient::complete(const ChatRequest& request) {
  auto it = script_.find(request.key);
  if (it == script_.end()) throw Error("no scripted response for key " + request.key);
  return it->second;
}

}  // namespace mrfg
