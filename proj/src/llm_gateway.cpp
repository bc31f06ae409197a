#include "simagent/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "simagent/text.hpp"

namespace simagent {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::system;
  if (s == "assistant") return Role::assistant;
  if (s == "user") return Role::user;
  throw std::invalid_argument("unknown chat role: " + std::string(s));
}

void cap_history(ChatHistory& history, std::size_t cap) {
  if (cap == 0 || history.size() <= cap) return;
  history.erase(history.begin(), history.end() - static_cast<std::ptrdiff_t>(cap));
}

std::string_view to_string(CallKind k) {
  switch (k) {
    case CallKind::plan: return "plan";
    case CallKind::code: return "code";
    case CallKind::embed: return "embed";
  }
  return "code";
}

// ---------------------------------------------------------------------------

CostSummary& CostSummary::operator+=(const CostSummary& o) {
  input_tokens += o.input_tokens;
  output_tokens += o.output_tokens;
  wall_time += o.wall_time;
  usd += o.usd;
  return *this;
}

CostSummary cost(std::span<const UsageRecord> ledger, const PricingTable& pricing) {
  CostSummary s;
  for (const auto& r : ledger) {
    s.input_tokens += r.input_tokens;
    s.output_tokens += r.output_tokens;
    s.wall_time += r.wall_time;
  }
  s.usd = (static_cast<double>(s.input_tokens) * pricing.usd_per_million_input +
           static_cast<double>(s.output_tokens) * pricing.usd_per_million_output) /
          1e6;
  return s;
}

void CostLedger::append(const UsageRecord& r) {
  std::lock_guard lock(mu_);
  records_.push_back(r);
}

std::vector<UsageRecord> CostLedger::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t CostLedger::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

CostRow average_cost(std::string label, std::span<const CostSummary> per_task) {
  CostRow row;
  row.label = std::move(label);
  if (per_task.empty()) return row;
  for (const auto& s : per_task) {
    row.wall_time += s.wall_time;
    row.input_tokens += static_cast<double>(s.input_tokens);
    row.output_tokens += static_cast<double>(s.output_tokens);
    row.usd += s.usd;
  }
  const auto n = static_cast<double>(per_task.size());
  row.wall_time /= n;
  row.input_tokens /= n;
  row.output_tokens /= n;
  row.usd /= n;
  return row;
}

std::string format_cost_table(const std::vector<CostRow>& rows, std::string_view label_header) {
  static constexpr const char* kColumns[] = {"Time (sec.)", "Input Token", "Output Token",
                                             "Expense (USD)"};
  std::size_t label_width = label_header.size();
  for (const auto& r : rows) label_width = std::max(label_width, r.label.size());

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(label_width)) << label_header;
  for (const char* c : kColumns) out << "  " << c;
  out << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(label_width)) << r.label << std::right
        << std::fixed << std::setprecision(3);
    const double values[] = {r.wall_time, r.input_tokens, r.output_tokens, r.usd};
    for (std::size_t i = 0; i < 4; ++i) {
      out << "  " << std::setw(static_cast<int>(std::char_traits<char>::length(kColumns[i])))
          << values[i];
    }
    out << '\n';
  }
  return out.str();
}

std::int64_t estimate_tokens(std::size_t chars) {
  return static_cast<std::int64_t>((chars + 3) / 4);
}

// ---------------------------------------------------------------------------

namespace {
std::string provider_message(int status, const std::string& body, const std::string& context) {
  std::string msg = "provider error";
  if (!context.empty()) msg += " (" + context + ")";
  msg += ": status " + std::to_string(status);
  if (!body.empty()) msg += ": " + body;
  return msg;
}
}  // namespace

ProviderError::ProviderError(int status, std::string body_excerpt, std::string context)
    : std::runtime_error(provider_message(status, body_excerpt, context)),
      status_(status),
      body_(std::move(body_excerpt)) {}

ScriptExhausted::ScriptExhausted(std::string latest_user_message)
    : ProviderError(0,
                    "no scripted rule matches: " +
                        latest_user_message.substr(0, std::min<std::size_t>(160, latest_user_message.size())),
                    "script exhausted") {}

ScriptedProvider::ScriptedProvider(std::vector<ScriptRule> rules, std::string name)
    : name_(std::move(name)) {
  rules_.reserve(rules.size());
  for (auto& r : rules) {
    try {
      rules_.push_back({std::regex(r.pattern, std::regex::ECMAScript), r.pattern, std::move(r.reply)});
    } catch (const std::regex_error& e) {
      throw std::invalid_argument("invalid script pattern '" + r.pattern + "': " + e.what());
    }
  }
}

std::vector<ScriptRule> ScriptedProvider::parse_rules(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("script file is not valid JSON: ") + e.what());
  }
  if (!doc.contains("rules") || !doc["rules"].is_array())
    throw std::invalid_argument("script file needs a \"rules\" array");
  std::vector<ScriptRule> rules;
  for (const auto& r : doc["rules"]) {
    if (!r.contains("pattern") || !r.contains("reply"))
      throw std::invalid_argument("script rule needs \"pattern\" and \"reply\"");
    std::string reply;
    // A reply may be written as an array of lines for readability.
    if (r["reply"].is_array()) {
      std::vector<std::string> parts = r["reply"].get<std::vector<std::string>>();
      reply = text::join(parts, "\n");
    } else {
      reply = r["reply"].get<std::string>();
    }
    rules.push_back({r["pattern"].get<std::string>(), std::move(reply)});
  }
  return rules;
}

ScriptedProvider ScriptedProvider::from_json(std::string_view json_text, std::string name) {
  return ScriptedProvider(parse_rules(json_text), std::move(name));
}

ChatReply ScriptedProvider::chat(const ChatMessageList& messages, const ChatParams&) {
  if (messages.empty()) throw std::invalid_argument("chat requires at least one message");
  {
    std::lock_guard lock(mu_);
    calls_.push_back(messages);
  }
  auto latest = std::find_if(messages.rbegin(), messages.rend(),
                             [](const ChatMessage& m) { return m.role == Role::user; });
  const std::string& probe = latest == messages.rend() ? messages.back().content : latest->content;

  for (const auto& rule : rules_) {
    if (!std::regex_search(probe, rule.re)) continue;
    std::size_t in_chars = 0;
    for (const auto& m : messages) in_chars += m.content.size();
    ChatReply reply;
    reply.text = rule.reply;
    reply.usage.input_tokens = estimate_tokens(in_chars);
    reply.usage.output_tokens = estimate_tokens(rule.reply.size());
    reply.usage.wall_time = 0.0;
    return reply;
  }
  throw ScriptExhausted(probe);
}

std::string ScriptedProvider::describe() const {
  return name_ + " (" + std::to_string(rules_.size()) + " rules)";
}

std::vector<ChatMessageList> ScriptedProvider::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::size_t ScriptedProvider::call_count() const {
  std::lock_guard lock(mu_);
  return calls_.size();
}

// ---------------------------------------------------------------------------

double EmbeddingVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

bool EmbeddingVector::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.values.size() != b.values.size())
    throw std::invalid_argument("embedding dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return s;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

void normalize(EmbeddingVector& v) {
  const double n = v.norm();
  if (n == 0.0) return;
  for (double& x : v.values) x /= n;
}

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::string HashingEmbedder::family() const {
  return "fnv1a-hash-" + std::to_string(dimension_);
}

std::vector<std::string> HashingEmbedder::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (c < 0x80 && std::isalnum(c)) {
      current += static_cast<char>(std::tolower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

EmbeddingVector HashingEmbedder::embed(std::string_view text) const {
  EmbeddingVector v;
  v.values.assign(dimension_, 0.0);
  for (const auto& tok : tokenize(text)) v.values[text::fnv1a64(tok) % dimension_] += 1.0;
  normalize(v);
  return v;
}

EmbeddingVector CountingEmbedder::embed(std::string_view text) const {
  {
    std::lock_guard lock(mu_);
    texts_.emplace_back(text);
  }
  return inner_.embed(text);
}

std::size_t CountingEmbedder::count() const {
  std::lock_guard lock(mu_);
  return texts_.size();
}

std::vector<std::string> CountingEmbedder::texts() const {
  std::lock_guard lock(mu_);
  return texts_;
}

void CountingEmbedder::reset() {
  std::lock_guard lock(mu_);
  texts_.clear();
}

}  // namespace simagent
