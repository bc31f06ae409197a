// HTTP-backed chat and embedding providers.

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "simagent/llm_gateway.hpp"

namespace simagent {

namespace {

using json = nlohmann::json;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint URL needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 300;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

bool retryable(int status) { return status == 0 || status == 429 || status >= 500; }

/// POSTs JSON, retrying up to `retries` extra times on transport failure,
/// 429 and 5xx. Returns the parsed body of a 200 response.
json post_json(const std::string& url, const std::string& api_key, const json& body, int timeout_seconds,
               int retries) {
  const Endpoint ep = split_url(url);
  httplib::Client client(ep.origin);
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  client.set_write_timeout(timeout_seconds, 0);

  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
  const std::string payload = body.dump(-1, ' ', false, json::error_handler_t::replace);

  int status = 0;
  std::string response_body;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(500));
    auto res = client.Post(ep.path, headers, payload, "application/json");
    if (!res) {
      status = 0;
      response_body = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    status = res->status;
    response_body = res->body;
    if (status == 200) {
      try {
        return json::parse(response_body);
      } catch (const json::exception&) {
        throw ProviderError(status, excerpt(response_body), "malformed JSON response");
      }
    }
    if (!retryable(status)) break;
  }
  throw ProviderError(status, excerpt(response_body), url);
}

}  // namespace

std::optional<LiveProviderConfig> LiveProviderConfig::from_environment() {
  LiveProviderConfig cfg;
  cfg.url = env_or_empty("SIMAGENT_LLM_URL");
  if (cfg.url.empty()) return std::nullopt;
  cfg.api_key = env_or_empty("SIMAGENT_LLM_KEY");
  if (auto model = env_or_empty("SIMAGENT_LLM_MODEL"); !model.empty()) cfg.model = model;
  return cfg;
}

LiveChatProvider::LiveChatProvider(LiveProviderConfig config) : config_(std::move(config)) {
  split_url(config_.url);
}

ChatReply LiveChatProvider::chat(const ChatMessageList& messages, const ChatParams& params) {
  if (messages.empty()) throw std::invalid_argument("chat requires at least one message");
  json body;
  body["model"] = config_.model;
  body["temperature"] = params.temperature;
  body["max_tokens"] = params.max_output;
  body["messages"] = json::array();
  for (const auto& m : messages)
    body["messages"].push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});

  const auto start = std::chrono::steady_clock::now();
  json response = post_json(config_.url, config_.api_key, body, config_.timeout_seconds, config_.retries);
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ChatReply reply;
  try {
    const auto& content = response.at("choices").at(0).at("message").at("content");
    reply.text = content.is_null() ? std::string() : content.get<std::string>();
  } catch (const json::exception&) {
    throw ProviderError(200, excerpt(response.dump()), "response lacks choices[0].message.content");
  }
  std::size_t in_chars = 0;
  for (const auto& m : messages) in_chars += m.content.size();
  const json usage = response.value("usage", json::object());
  reply.usage.input_tokens = usage.value("prompt_tokens", estimate_tokens(in_chars));
  reply.usage.output_tokens = usage.value("completion_tokens", estimate_tokens(reply.text.size()));
  reply.usage.wall_time = elapsed;
  return reply;
}

std::string LiveChatProvider::describe() const { return "live " + config_.model + " @ " + config_.url; }

std::optional<LiveEmbedderConfig> LiveEmbedderConfig::from_environment() {
  LiveEmbedderConfig cfg;
  cfg.url = env_or_empty("SIMAGENT_EMBED_URL");
  if (cfg.url.empty()) return std::nullopt;
  cfg.api_key = env_or_empty("SIMAGENT_EMBED_KEY");
  if (auto model = env_or_empty("SIMAGENT_EMBED_MODEL"); !model.empty()) cfg.model = model;
  if (auto dim = env_or_empty("SIMAGENT_EMBED_DIM"); !dim.empty()) cfg.dimension = std::stoul(dim);
  return cfg;
}

LiveEmbedder::LiveEmbedder(LiveEmbedderConfig config, CostLedger* ledger)
    : config_(std::move(config)), ledger_(ledger) {
  split_url(config_.url);
}

std::string LiveEmbedder::family() const {
  return "live:" + config_.model + ":" + std::to_string(config_.dimension);
}

EmbeddingVector LiveEmbedder::embed(std::string_view text) const {
  EmbeddingVector v;
  if (text.empty()) {
    v.values.assign(config_.dimension, 0.0);
    return v;
  }
  json body{{"model", config_.model}, {"input", std::string(text)}};
  const auto start = std::chrono::steady_clock::now();
  json response = post_json(config_.url, config_.api_key, body, config_.timeout_seconds, 1);
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    v.values = response.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ProviderError(200, excerpt(response.dump()), "response lacks data[0].embedding");
  }
  if (v.values.size() != config_.dimension)
    throw ProviderError(200, "embedding has dimension " + std::to_string(v.values.size()),
                        "expected " + std::to_string(config_.dimension));
  normalize(v);
  if (ledger_) {
    const json usage = response.value("usage", json::object());
    ledger_->append({usage.value("prompt_tokens", estimate_tokens(text.size())), 0, elapsed, CallKind::embed});
  }
  return v;
}

}  // namespace simagent
