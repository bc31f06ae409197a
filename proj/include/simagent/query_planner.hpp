#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "simagent/llm_gateway.hpp"
#include "simagent/request.hpp"

// The retrieval agent: turns a simulation request (or an error report) into
// keyword sub-queries.
namespace simagent {

struct ErrorReport;

enum class SubQueryKind { function, option, error };
std::string_view to_string(SubQueryKind k);
SubQueryKind subquery_kind_from_string(std::string_view s);

struct SubQuery {
  std::size_t id = 0;
  SubQueryKind kind = SubQueryKind::function;
  std::string keyword;               // function name, option description or error phrase
  std::optional<std::string> value;  // option value, kind == option only

  bool operator==(const SubQuery&) const = default;
};

struct QueryPlan {
  std::string request_id;
  std::vector<SubQuery> subqueries;  // ids are 0..n-1 in order

  bool operator==(const QueryPlan&) const = default;
};

struct FewShotPair {
  std::string input;
  std::string output;
};

/// Sections: [instructions], [output_format], [request] (holds {{request}}),
/// then any number of [example.request]/[example.output] pairs.
struct PlannerPromptTemplate {
  std::string instructions;
  std::string output_format_spec;
  std::string request_template = "{{request}}";
  std::vector<FewShotPair> few_shot_examples;

  static PlannerPromptTemplate parse(std::string_view text);
};

class PlannerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PlannerInputEmpty : public PlannerError {
 public:
  PlannerInputEmpty() : PlannerError("planner request text is empty") {}
};

/// The model reply held no tagged lines. Callers fall back to whole-text retrieval.
class EmptyPlan : public PlannerError {
 public:
  explicit EmptyPlan(std::string reply) : PlannerError("planner reply contains no tagged lines"), reply_(std::move(reply)) {}
  const std::string& reply() const noexcept { return reply_; }

 private:
  std::string reply_;
};

/// System message (instructions, output format, examples) followed by the
/// user message carrying the request.
ChatMessageList render_planner_prompt(const PlannerPromptTemplate& tmpl, std::string_view request_text);

/// Picks up lines beginning with `FUNCTION:`, `OPTION:` or `ERROR:` (any case,
/// optional leading whitespace and list bullet); everything else is ignored.
/// An OPTION line may carry `| value` after the description.
QueryPlan parse_plan_reply(std::string_view reply_text);

struct PlanOutcome {
  QueryPlan plan;
  ChatMessageList prompt;
  std::string reply;
  UsageRecord usage;
};

/// render -> chat -> parse. Usage is appended to `ledger` even when the reply
/// fails to parse. Provider errors are rethrown with the request id attached.
PlanOutcome plan_queries(const SimulationRequest& request, ChatProvider& llm,
                         const PlannerPromptTemplate& tmpl, CostLedger& ledger);

/// Same contract, with the rendered error report as the request text.
PlanOutcome plan_error_queries(const ErrorReport& report, std::string_view request_id, ChatProvider& llm,
                               const PlannerPromptTemplate& tmpl, CostLedger& ledger);

}  // namespace simagent
