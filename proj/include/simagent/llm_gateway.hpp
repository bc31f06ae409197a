#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Uniform access to chat models and text embedders, plus token/time/cost
// accounting. Providers are safe to call concurrently.
namespace simagent {

enum class Role { system, user, assistant };
std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

using ChatMessageList = std::vector<ChatMessage>;
using ChatHistory = std::vector<ChatMessage>;

/// Keeps only the most recent `cap` messages. A cap of 0 means unbounded.
void cap_history(ChatHistory& history, std::size_t cap);

// ---------------------------------------------------------------------------
// Usage accounting

enum class CallKind { plan, code, embed };
std::string_view to_string(CallKind k);

struct UsageRecord {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  double wall_time = 0.0;  // seconds
  CallKind call_kind = CallKind::code;
};

struct PricingTable {
  double usd_per_million_input = 0.0;
  double usd_per_million_output = 0.0;
};

struct CostSummary {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  double wall_time = 0.0;
  double usd = 0.0;

  CostSummary& operator+=(const CostSummary& o);
};

CostSummary cost(std::span<const UsageRecord> ledger, const PricingTable& pricing);

/// Append-only, thread-safe list of usage records.
class CostLedger {
 public:
  void append(const UsageRecord& r);
  std::vector<UsageRecord> records() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<UsageRecord> records_;
};

/// One labelled row of a cost table. Values are usually per-task averages,
/// hence fractional token counts.
struct CostRow {
  std::string label;
  double wall_time = 0.0;
  double input_tokens = 0.0;
  double output_tokens = 0.0;
  double usd = 0.0;
};

/// Per-task average of a set of summaries; all zeros for an empty set.
CostRow average_cost(std::string label, std::span<const CostSummary> per_task);

/// Renders rows with the columns Time (sec.), Input Token, Output Token and
/// Expense (USD), in that order.
std::string format_cost_table(const std::vector<CostRow>& rows, std::string_view label_header = "Scheme");

/// ceil(chars / 4). Used wherever a provider does not report usage.
std::int64_t estimate_tokens(std::size_t chars);

// ---------------------------------------------------------------------------
// Chat providers

class ProviderError : public std::runtime_error {
 public:
  ProviderError(int status, std::string body_excerpt, std::string context = {});

  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

/// Raised by the scripted provider when no rule matches the latest user message.
class ScriptExhausted : public ProviderError {
 public:
  explicit ScriptExhausted(std::string latest_user_message);
};

struct ChatParams {
  double temperature = 0.0;
  int max_output = 2048;
};

struct ChatReply {
  std::string text;
  UsageRecord usage;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  /// `messages` must be non-empty.
  virtual ChatReply chat(const ChatMessageList& messages, const ChatParams& params) = 0;
  virtual std::string describe() const = 0;
};

struct ScriptRule {
  std::string pattern;
  std::string reply;
};

/// Deterministic provider driven by ordered (regex, reply) rules. The first
/// rule whose pattern is found in the latest user message wins. Every call is
/// captured so tests can inspect the exact prompt sent.
class ScriptedProvider final : public ChatProvider {
 public:
  explicit ScriptedProvider(std::vector<ScriptRule> rules, std::string name = "scripted");

  /// Script file: {"rules": [{"pattern": "...", "reply": "..."}, ...]}.
  static ScriptedProvider from_json(std::string_view json_text, std::string name = "scripted");
  static std::vector<ScriptRule> parse_rules(std::string_view json_text);

  ChatReply chat(const ChatMessageList& messages, const ChatParams& params) override;
  std::string describe() const override;

  std::vector<ChatMessageList> calls() const;
  std::size_t call_count() const;

 private:
  struct CompiledRule {
    std::regex re;
    std::string pattern;
    std::string reply;
  };
  std::vector<CompiledRule> rules_;
  std::string name_;
  mutable std::mutex mu_;
  std::vector<ChatMessageList> calls_;
};

struct LiveProviderConfig {
  std::string url;  // full chat-completion endpoint, e.g. https://host/v1/chat/completions
  std::string api_key;
  std::string model = "gpt-4o-2024-05-13";
  int timeout_seconds = 120;
  int retries = 1;  // one extra attempt on transport failure or 5xx/429

  /// Reads SIMAGENT_LLM_URL, SIMAGENT_LLM_KEY and SIMAGENT_LLM_MODEL. Returns
  /// nullopt when the URL is not set.
  static std::optional<LiveProviderConfig> from_environment();
};

/// Posts the usual chat-completion JSON shape (model, messages[role,content])
/// and reads choices[0].message.content plus usage.prompt_tokens and
/// usage.completion_tokens.
class LiveChatProvider final : public ChatProvider {
 public:
  explicit LiveChatProvider(LiveProviderConfig config);
  ChatReply chat(const ChatMessageList& messages, const ChatParams& params) override;
  std::string describe() const override;

 private:
  LiveProviderConfig config_;
};

// ---------------------------------------------------------------------------
// Embeddings

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dimension() const noexcept { return values.size(); }
  double norm() const;
  bool is_zero() const;
  bool operator==(const EmbeddingVector&) const = default;
};

/// Plain dot product, summed in index order.
double dot(const EmbeddingVector& a, const EmbeddingVector& b);
/// dot / (|a||b|), or 0 when either side is the zero vector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
  virtual std::size_t dimension() const = 0;
  /// Identifies the vector space; an index only answers queries from the same family.
  virtual std::string family() const = 0;
};

/// Lowercases, splits on non-alphanumerics, hashes each token with FNV-1a
/// into one of D buckets, counts, then L2-normalizes. No tokens gives the
/// zero vector.
class HashingEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDefaultDimension = 256;

  explicit HashingEmbedder(std::size_t dimension = kDefaultDimension);
  EmbeddingVector embed(std::string_view text) const override;
  std::size_t dimension() const override { return dimension_; }
  std::string family() const override;

  static std::vector<std::string> tokenize(std::string_view text);

 private:
  std::size_t dimension_;
};

struct LiveEmbedderConfig {
  std::string url;  // embeddings endpoint
  std::string api_key;
  std::string model = "text-embedding-v2";
  std::size_t dimension = 1536;
  int timeout_seconds = 60;

  /// SIMAGENT_EMBED_URL / SIMAGENT_EMBED_KEY / SIMAGENT_EMBED_MODEL / SIMAGENT_EMBED_DIM.
  static std::optional<LiveEmbedderConfig> from_environment();
};

/// Hosted embedding endpoint ({"model","input"} -> data[0].embedding). The
/// returned vector is L2-normalized locally.
class LiveEmbedder final : public Embedder {
 public:
  explicit LiveEmbedder(LiveEmbedderConfig config, CostLedger* ledger = nullptr);
  EmbeddingVector embed(std::string_view text) const override;
  std::size_t dimension() const override { return config_.dimension; }
  std::string family() const override;

 private:
  LiveEmbedderConfig config_;
  CostLedger* ledger_;
};

/// Decorator recording every text it embeds; used to verify which retrieval
/// calls a scheme performs.
class CountingEmbedder final : public Embedder {
 public:
  explicit CountingEmbedder(const Embedder& inner) : inner_(inner) {}
  EmbeddingVector embed(std::string_view text) const override;
  std::size_t dimension() const override { return inner_.dimension(); }
  std::string family() const override { return inner_.family(); }

  std::size_t count() const;
  std::vector<std::string> texts() const;
  void reset();

 private:
  const Embedder& inner_;
  mutable std::mutex mu_;
  mutable std::vector<std::string> texts_;
};

/// L2-normalizes in place; leaves the zero vector untouched.
void normalize(EmbeddingVector& v);

}  // namespace simagent
