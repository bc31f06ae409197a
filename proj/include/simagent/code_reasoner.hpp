#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "simagent/knowledge_base.hpp"
#include "simagent/llm_gateway.hpp"
#include "simagent/query_planner.hpp"
#include "simagent/scheme.hpp"

// The coding agent: builds the reasoning prompt and pulls the script out of
// the model's reply.
namespace simagent {

inline constexpr std::string_view kRoleHeader = "## Role";
inline constexpr std::string_view kReasoningHeader = "## Reasoning Steps";
inline constexpr std::string_view kStaticKnowledgeHeader = "## Static Basic Knowledge";
inline constexpr std::string_view kExamplesHeader = "## Examples";
inline constexpr std::string_view kRetrievalHeader = "## Retrieved Knowledge";

/// Template file sections: [role], exactly four [step] sections, any number
/// of [example.task]/[example.code] pairs, [retrieval] holding {{retrieval}}
/// and [request] holding {{request}}. Static knowledge is tool-specific and
/// loaded from its own file.
struct ReasonerPromptTemplate {
  std::string role_definition;
  std::array<std::string, 4> reasoning_steps;
  std::vector<FewShotPair> few_shot_examples;  // (task, code)
  std::string static_knowledge;
  std::string retrieval_template = "{{retrieval}}";
  std::string request_template = "{{request}}";

  static ReasonerPromptTemplate parse(std::string_view text, std::string static_knowledge = {});
};

enum class ExtractionMethod { fenced_block, code_marker };
std::string_view to_string(ExtractionMethod m);

struct GeneratedCode {
  std::string raw_reply;
  std::string code;
  ExtractionMethod extraction_method = ExtractionMethod::fenced_block;
};

class NoCodeFound : public std::runtime_error {
 public:
  explicit NoCodeFound(std::string reply, UsageRecord usage = {});
  const std::string& reply() const noexcept { return reply_; }
  const UsageRecord& usage() const noexcept { return usage_; }

 private:
  std::string reply_;
  UsageRecord usage_;
};

/// System message with the sections the scheme enables, in the order role,
/// reasoning steps, static knowledge, examples, retrieved knowledge; then the
/// history messages verbatim; then the request as the final user message.
ChatMessageList assemble_coder_prompt(const ReasonerPromptTemplate& tmpl, std::string_view request_text,
                                      const RetrievalResult& retrieval, const ChatHistory& history,
                                      const SchemeConfig& scheme);

/// Takes the last non-empty fenced block (``` with any language hint; an
/// unterminated final fence runs to the end of the reply). Without fences,
/// takes every line after a line reading exactly `CODE:`.
GeneratedCode extract_code(std::string_view reply_text);

struct CodeGeneration {
  GeneratedCode code;
  ChatMessageList prompt;
  UsageRecord usage;
};

/// assemble -> chat -> extract. Usage is appended to `ledger` before
/// extraction, so a NoCodeFound reply is still accounted for.
CodeGeneration generate_code(std::string_view request_text, const RetrievalResult& retrieval,
                             const ChatHistory& history, const SchemeConfig& scheme, ChatProvider& llm,
                             const ReasonerPromptTemplate& tmpl, CostLedger& ledger);

}  // namespace simagent
