#include "simagent/query_planner.hpp"

#include "simagent/error_report.hpp"
#include "simagent/template_file.hpp"
#include "simagent/text.hpp"

namespace simagent {

std::string_view to_string(SubQueryKind k) {
  switch (k) {
    case SubQueryKind::function: return "function";
    case SubQueryKind::option: return "option";
    case SubQueryKind::error: return "error";
  }
  return "function";
}

SubQueryKind subquery_kind_from_string(std::string_view s) {
  if (s == "function") return SubQueryKind::function;
  if (s == "option") return SubQueryKind::option;
  if (s == "error") return SubQueryKind::error;
  throw std::invalid_argument("unknown sub-query kind: " + std::string(s));
}

PlannerPromptTemplate PlannerPromptTemplate::parse(std::string_view text_in) {
  PlannerPromptTemplate t;
  bool have_request = false;
  std::optional<std::string> pending_example;
  for (auto& s : parse_template_sections(text_in)) {
    if (s.name == "instructions") {
      t.instructions = std::move(s.body);
    } else if (s.name == "output_format") {
      t.output_format_spec = std::move(s.body);
    } else if (s.name == "request") {
      if (count_slot(s.body, "request") != 1) throw TemplateSlotMissing("request", "request");
      t.request_template = std::move(s.body);
      have_request = true;
    } else if (s.name == "example.request") {
      if (pending_example) throw TemplateError("[example.request] without a following [example.output]");
      pending_example = std::move(s.body);
    } else if (s.name == "example.output") {
      if (!pending_example) throw TemplateError("[example.output] without a preceding [example.request]");
      t.few_shot_examples.push_back({std::move(*pending_example), std::move(s.body)});
      pending_example.reset();
    } else {
      throw TemplateError("unknown planner template section [" + s.name + "]");
    }
  }
  if (pending_example) throw TemplateError("[example.request] without a following [example.output]");
  if (!have_request) throw TemplateSlotMissing("request", "request");
  if (text::trim(t.instructions).empty()) throw TemplateError("planner template needs an [instructions] section");
  return t;
}

ChatMessageList render_planner_prompt(const PlannerPromptTemplate& tmpl, std::string_view request_text) {
  if (text::trim(request_text).empty()) throw PlannerInputEmpty();

  std::string system = tmpl.instructions;
  if (!tmpl.output_format_spec.empty()) system += "\n\nOutput format:\n" + tmpl.output_format_spec;
  for (std::size_t i = 0; i < tmpl.few_shot_examples.size(); ++i) {
    const auto& ex = tmpl.few_shot_examples[i];
    system += "\n\nExample " + std::to_string(i + 1) + "\nRequest:\n" + ex.input + "\nOutput:\n" + ex.output;
  }
  return {
      {Role::system, std::move(system)},
      {Role::user, fill_slot(tmpl.request_template, "request", request_text, "request")},
  };
}

namespace {

std::string_view strip_bullet(std::string_view line) {
  line = text::trim_left(line);
  if (line.starts_with("- ") || line.starts_with("* ")) return text::trim_left(line.substr(2));
  return line;
}

}  // namespace

QueryPlan parse_plan_reply(std::string_view reply_text) {
  static constexpr std::pair<std::string_view, SubQueryKind> kTags[] = {
      {"FUNCTION:", SubQueryKind::function},
      {"OPTION:", SubQueryKind::option},
      {"ERROR:", SubQueryKind::error},
  };
  QueryPlan plan;
  for (auto raw : text::lines(reply_text)) {
    const auto line = strip_bullet(raw);
    for (auto [tag, kind] : kTags) {
      if (!text::istarts_with(line, tag)) continue;
      auto body = text::trim(line.substr(tag.size()));
      SubQuery q;
      q.kind = kind;
      if (kind == SubQueryKind::option) {
        auto bar = body.find('|');
        if (bar != std::string_view::npos) {
          auto value = text::trim(body.substr(bar + 1));
          if (!value.empty()) q.value = std::string(value);
          body = text::trim(body.substr(0, bar));
        }
      }
      q.keyword = std::string(body);
      if (q.keyword.empty()) break;
      q.id = plan.subqueries.size();
      plan.subqueries.push_back(std::move(q));
      break;
    }
  }
  if (plan.subqueries.empty()) throw EmptyPlan(std::string(reply_text));
  return plan;
}

namespace {

PlanOutcome run_planner(std::string_view request_text, std::string_view request_id, ChatProvider& llm,
                        const PlannerPromptTemplate& tmpl, CostLedger& ledger) {
  PlanOutcome out;
  out.prompt = render_planner_prompt(tmpl, request_text);
  ChatReply reply;
  try {
    reply = llm.chat(out.prompt, ChatParams{});
  } catch (const ProviderError& e) {
    throw ProviderError(e.status(), e.body_excerpt(), "planner, request " + std::string(request_id));
  }
  reply.usage.call_kind = CallKind::plan;
  ledger.append(reply.usage);
  out.reply = std::move(reply.text);
  out.usage = reply.usage;
  out.plan = parse_plan_reply(out.reply);
  out.plan.request_id = std::string(request_id);
  return out;
}

}  // namespace

PlanOutcome plan_queries(const SimulationRequest& request, ChatProvider& llm, const PlannerPromptTemplate& tmpl,
                         CostLedger& ledger) {
  return run_planner(request.text, request.id, llm, tmpl, ledger);
}

PlanOutcome plan_error_queries(const ErrorReport& report, std::string_view request_id, ChatProvider& llm,
                               const PlannerPromptTemplate& tmpl, CostLedger& ledger) {
  return run_planner(render_error_report(report), request_id, llm, tmpl, ledger);
}

}  // namespace simagent
