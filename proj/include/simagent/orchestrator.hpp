#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "simagent/code_reasoner.hpp"
#include "simagent/error_report.hpp"
#include "simagent/knowledge_base.hpp"
#include "simagent/llm_gateway.hpp"
#include "simagent/query_planner.hpp"
#include "simagent/request.hpp"
#include "simagent/scheme.hpp"
#include "simagent/sim_environment.hpp"

// Per-task loop: plan -> retrieve -> generate -> execute, and on an execution
// error build a report and go round again until success or N_max attempts.
namespace simagent {

struct Templates {
  PlannerPromptTemplate planner;        // request -> function/option keywords
  PlannerPromptTemplate error_planner;  // error report -> error keywords
  ReasonerPromptTemplate reasoner;
};

struct LoopOptions {
  std::size_t top_k = kDefaultTopK;
  std::size_t history_cap = 20;  // messages; 0 keeps everything
  /// With query planning on, run the planner over error reports too.
  /// Otherwise the rendered report is retrieved as one query.
  bool plan_error_queries = true;
};

/// Everything a task needs besides the request and scheme. `index` and
/// `embedder` may be null when no scheme in use retrieves.
struct TaskContext {
  const SimulationEnvironment& env;
  const VectorIndex* index = nullptr;
  const Embedder* embedder = nullptr;
  ChatProvider& planner;  // retrieval agent
  ChatProvider& coder;    // coding agent
  const Templates& templates;
  const HintsConfig& hints;
  PricingTable pricing;
  LoopOptions options;
};

enum class TerminalStatus { success, exhausted, noretry_failure };
std::string_view to_string(TerminalStatus s);
TerminalStatus terminal_status_from_string(std::string_view s);

struct AttemptRecord {
  int index = 1;  // 1-based
  std::string code;
  ExecutionOutcome outcome;
  QueryPlan plan_used;                         // empty when no planner ran
  std::vector<std::string> retrieval_queries;  // texts actually embedded
  std::vector<std::string> context_chunk_ids;  // merged retrieval, prompt order
  std::string prompt_digest;                   // FNV-1a over the coder prompt
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  ChatMessageList coder_prompt;  // kept in memory only, not traced
};

struct TaskResult {
  std::string request_id;
  Complexity complexity = Complexity::standard;
  std::vector<AttemptRecord> attempts;
  TerminalStatus terminal_status = TerminalStatus::exhausted;
  double wall_time = 0.0;
  CostSummary cost;
  std::string failure_reason;  // provider failures and the like
};

struct RetrievalSelection {
  RetrievalResult result;
  QueryPlan plan;
  std::vector<std::string> queries;
};

/// Chooses retrieval for a fresh request according to the scheme:
/// proposed+planning -> planner then parallel retrieval (whole request if the
/// plan is empty); proposed without planning or standard -> one whole-text
/// query; none -> nothing. Without the option document, option chunks are
/// filtered out before ranking.
RetrievalSelection select_retrieval(const SchemeConfig& scheme, const SimulationRequest& request,
                                    const TaskContext& ctx, CostLedger& ledger);

/// Same for a retry driven by an error report. An empty error plan falls back
/// to the bare error message as the single query.
RetrievalSelection select_retrieval(const SchemeConfig& scheme, const ErrorReport& report,
                                    std::string_view request_id, const TaskContext& ctx, CostLedger& ledger);

std::string prompt_digest(const ChatMessageList& prompt);

TaskResult run_task(const SimulationRequest& request, const SchemeConfig& scheme, const TaskContext& ctx);

}  // namespace simagent
