#include "simagent/orchestrator.hpp"

#include <chrono>
#include <optional>
#include <stdexcept>

#include "simagent/text.hpp"

namespace simagent {

std::string_view to_string(Complexity c) { return c == Complexity::complex ? "complex" : "standard"; }

Complexity complexity_from_string(std::string_view s) {
  if (s == "standard") return Complexity::standard;
  if (s == "complex") return Complexity::complex;
  throw std::invalid_argument("unknown complexity '" + std::string(s) + "'");
}

std::string_view to_string(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::success: return "success";
    case TerminalStatus::exhausted: return "exhausted";
    case TerminalStatus::noretry_failure: return "noretry_failure";
  }
  return "exhausted";
}

TerminalStatus terminal_status_from_string(std::string_view s) {
  if (s == "success") return TerminalStatus::success;
  if (s == "exhausted") return TerminalStatus::exhausted;
  if (s == "noretry_failure") return TerminalStatus::noretry_failure;
  throw std::invalid_argument("unknown terminal status '" + std::string(s) + "'");
}

namespace {

SourceFilter filter_for(const SchemeConfig& scheme) {
  return scheme.triple_doc ? SourceFilter::all : SourceFilter::manual_only;
}

void require_index(const TaskContext& ctx, const SchemeConfig& scheme) {
  if (!ctx.index || !ctx.embedder)
    throw std::logic_error("scheme " + scheme.name + " retrieves but no index/embedder was supplied");
}

RetrievalSelection whole_text(const SchemeConfig& scheme, std::string_view text, const TaskContext& ctx) {
  require_index(ctx, scheme);
  RetrievalSelection sel;
  sel.queries.emplace_back(text);
  auto ranked = retrieve(*ctx.index, *ctx.embedder, text, ctx.options.top_k, filter_for(scheme));
  sel.result.merged = merge_ranked(*ctx.index, {ranked});
  sel.result.per_subquery.emplace(0, std::move(ranked));
  return sel;
}

RetrievalSelection from_plan(const SchemeConfig& scheme, QueryPlan plan, const TaskContext& ctx) {
  RetrievalSelection sel;
  for (const auto& q : plan.subqueries) sel.queries.push_back(retrieval_text(q));
  sel.result = retrieve_parallel(*ctx.index, *ctx.embedder, plan, ctx.options.top_k, filter_for(scheme));
  sel.plan = std::move(plan);
  return sel;
}

}  // namespace

RetrievalSelection select_retrieval(const SchemeConfig& scheme, const SimulationRequest& request,
                                    const TaskContext& ctx, CostLedger& ledger) {
  if (scheme.rag_mode == RagMode::none) return {};
  if (!(scheme.rag_mode == RagMode::proposed && scheme.query_planning)) return whole_text(scheme, request.text, ctx);
  require_index(ctx, scheme);
  try {
    return from_plan(scheme, plan_queries(request, ctx.planner, ctx.templates.planner, ledger).plan, ctx);
  } catch (const EmptyPlan&) {
    return whole_text(scheme, request.text, ctx);
  }
}

RetrievalSelection select_retrieval(const SchemeConfig& scheme, const ErrorReport& report,
                                    std::string_view request_id, const TaskContext& ctx, CostLedger& ledger) {
  if (scheme.rag_mode == RagMode::none) return {};
  const bool plan = scheme.rag_mode == RagMode::proposed && scheme.query_planning && ctx.options.plan_error_queries;
  if (!plan) return whole_text(scheme, render_error_report(report), ctx);
  require_index(ctx, scheme);
  try {
    return from_plan(scheme,
                     plan_error_queries(report, request_id, ctx.planner, ctx.templates.error_planner, ledger).plan,
                     ctx);
  } catch (const EmptyPlan&) {
    return whole_text(scheme, report.error_message, ctx);
  }
}

std::string prompt_digest(const ChatMessageList& prompt) {
  std::string flat;
  for (const auto& m : prompt) {
    flat += to_string(m.role);
    flat += '\x1f';
    flat += m.content;
    flat += '\x1e';
  }
  return text::hex64(text::fnv1a64(flat));
}

TaskResult run_task(const SimulationRequest& request, const SchemeConfig& scheme, const TaskContext& ctx) {
  validate(scheme);
  const auto started = std::chrono::steady_clock::now();
  TaskResult result;
  result.request_id = request.id;
  result.complexity = request.complexity;

  CostLedger ledger;
  ChatHistory history;
  std::string user_text = request.text;
  std::optional<ErrorReport> report;

  for (int attempt = 1;; ++attempt) {
    AttemptRecord rec;
    rec.index = attempt;
    const std::size_t ledger_mark = ledger.size();
    std::string reply_text;
    try {
      RetrievalSelection sel = report ? select_retrieval(scheme, *report, request.id, ctx, ledger)
                                      : select_retrieval(scheme, request, ctx, ledger);
      rec.plan_used = std::move(sel.plan);
      rec.plan_used.request_id = request.id;
      rec.retrieval_queries = std::move(sel.queries);
      for (const auto& c : sel.result.merged) rec.context_chunk_ids.push_back(c.id);
      try {
        auto gen = generate_code(user_text, sel.result, history, scheme, ctx.coder, ctx.templates.reasoner, ledger);
        rec.coder_prompt = std::move(gen.prompt);
        rec.code = gen.code.code;
        reply_text = std::move(gen.code.raw_reply);
        rec.outcome = ctx.env.run(rec.code, scheme.error_reporting);
      } catch (const NoCodeFound& e) {
        // The raw reply stands in for the code so the report can show it.
        rec.coder_prompt = assemble_coder_prompt(ctx.templates.reasoner, user_text, sel.result, history, scheme);
        rec.code = e.reply();
        reply_text = e.reply();
        rec.outcome = ExecutionOutcome::no_code_found();
      }
    } catch (const ProviderError& e) {
      rec.outcome = ExecutionOutcome::failure(ErrorKind::provider_error, e.what());
      result.failure_reason = e.what();
    }
    rec.prompt_digest = rec.coder_prompt.empty() ? std::string() : prompt_digest(rec.coder_prompt);
    const auto all = ledger.records();
    for (std::size_t i = ledger_mark; i < all.size(); ++i) {
      rec.input_tokens += all[i].input_tokens;
      rec.output_tokens += all[i].output_tokens;
    }
    const ExecutionOutcome outcome = rec.outcome;
    const std::string code = rec.code;
    result.attempts.push_back(std::move(rec));

    if (!result.failure_reason.empty()) {
      result.terminal_status = TerminalStatus::exhausted;
      break;
    }
    history.push_back({Role::user, user_text});
    history.push_back({Role::assistant, reply_text});
    cap_history(history, ctx.options.history_cap);

    if (!detect_error(outcome)) {
      result.terminal_status = TerminalStatus::success;
      break;
    }
    if (!scheme.feedback) {
      result.terminal_status = TerminalStatus::noretry_failure;
      break;
    }
    if (attempt >= scheme.n_max) {
      result.terminal_status = TerminalStatus::exhausted;
      break;
    }
    report = build_error_report(code, outcome, ctx.hints, history);
    user_text = render_error_report(*report);
  }

  const auto records = ledger.records();
  result.cost = cost(records, ctx.pricing);
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  // Provider-reported call times are part of the cost; keep the larger of the two.
  if (result.cost.wall_time > result.wall_time) result.wall_time = result.cost.wall_time;
  return result;
}

}  // namespace simagent
