#include "simagent/code_reasoner.hpp"

#include <optional>

#include "simagent/error_report.hpp"
#include "simagent/template_file.hpp"
#include "simagent/text.hpp"

namespace simagent {

ReasonerPromptTemplate ReasonerPromptTemplate::parse(std::string_view text_in, std::string static_knowledge) {
  ReasonerPromptTemplate t;
  t.static_knowledge = std::move(static_knowledge);
  std::size_t steps = 0;
  bool have_retrieval = false, have_request = false;
  std::optional<std::string> pending_task;
  for (auto& s : parse_template_sections(text_in)) {
    if (s.name == "role") {
      t.role_definition = std::move(s.body);
    } else if (s.name == "step") {
      if (steps == t.reasoning_steps.size()) throw TemplateError("reasoner template has more than four [step] sections");
      t.reasoning_steps[steps++] = std::move(s.body);
    } else if (s.name == "example.task") {
      if (pending_task) throw TemplateError("[example.task] without a following [example.code]");
      pending_task = std::move(s.body);
    } else if (s.name == "example.code") {
      if (!pending_task) throw TemplateError("[example.code] without a preceding [example.task]");
      t.few_shot_examples.push_back({std::move(*pending_task), std::move(s.body)});
      pending_task.reset();
    } else if (s.name == "retrieval") {
      if (count_slot(s.body, "retrieval") != 1) throw TemplateSlotMissing("retrieval", "retrieval");
      t.retrieval_template = std::move(s.body);
      have_retrieval = true;
    } else if (s.name == "request") {
      if (count_slot(s.body, "request") != 1) throw TemplateSlotMissing("request", "request");
      t.request_template = std::move(s.body);
      have_request = true;
    } else {
      throw TemplateError("unknown reasoner template section [" + s.name + "]");
    }
  }
  if (pending_task) throw TemplateError("[example.task] without a following [example.code]");
  if (steps != t.reasoning_steps.size())
    throw TemplateError("reasoner template needs exactly four [step] sections, found " + std::to_string(steps));
  if (!have_retrieval) throw TemplateSlotMissing("retrieval", "retrieval");
  if (!have_request) throw TemplateSlotMissing("request", "request");
  return t;
}

std::string_view to_string(ExtractionMethod m) {
  return m == ExtractionMethod::fenced_block ? "fenced_block" : "code_marker";
}

NoCodeFound::NoCodeFound(std::string reply, UsageRecord usage)
    : std::runtime_error("reply contains no code block"), reply_(std::move(reply)), usage_(usage) {}

namespace {

void append_section(std::string& out, std::string_view header, std::string_view body) {
  if (!out.empty()) out += "\n\n";
  out += header;
  out += '\n';
  out += body;
}

std::string retrieval_body(const RetrievalResult& retrieval, const SchemeConfig& scheme) {
  if (scheme.rag_mode == RagMode::none || retrieval.merged.empty()) return std::string(kEmptySectionMarker);
  std::vector<std::string> texts;
  texts.reserve(retrieval.merged.size());
  for (const auto& c : retrieval.merged) texts.push_back(c.text);
  return text::join(texts, "\n---\n");
}

}  // namespace

ChatMessageList assemble_coder_prompt(const ReasonerPromptTemplate& tmpl, std::string_view request_text,
                                      const RetrievalResult& retrieval, const ChatHistory& history,
                                      const SchemeConfig& scheme) {
  std::string system;
  if (scheme.cot) {
    append_section(system, kRoleHeader, tmpl.role_definition);
    std::string steps;
    for (std::size_t i = 0; i < tmpl.reasoning_steps.size(); ++i) {
      if (i) steps += '\n';
      steps += std::to_string(i + 1) + ". " + tmpl.reasoning_steps[i];
    }
    append_section(system, kReasoningHeader, steps);
  }
  if (scheme.static_knowledge) {
    append_section(system, kStaticKnowledgeHeader,
                   text::trim(tmpl.static_knowledge).empty() ? kEmptySectionMarker : std::string_view(tmpl.static_knowledge));
  }
  if (scheme.few_shot) {
    std::string examples;
    for (std::size_t i = 0; i < tmpl.few_shot_examples.size(); ++i) {
      if (i) examples += "\n\n";
      examples += "Example " + std::to_string(i + 1) + "\nTask:\n" + tmpl.few_shot_examples[i].input +
                  "\nCode:\n```\n" + tmpl.few_shot_examples[i].output + "\n```";
    }
    append_section(system, kExamplesHeader, examples.empty() ? std::string(kEmptySectionMarker) : examples);
  }
  append_section(system, kRetrievalHeader,
                 fill_slot(tmpl.retrieval_template, "retrieval", retrieval_body(retrieval, scheme), "retrieval"));

  ChatMessageList messages;
  messages.reserve(history.size() + 2);
  messages.push_back({Role::system, std::move(system)});
  messages.insert(messages.end(), history.begin(), history.end());
  messages.push_back({Role::user, fill_slot(tmpl.request_template, "request", request_text, "request")});
  return messages;
}

GeneratedCode extract_code(std::string_view reply_text) {
  const auto all = text::lines(reply_text);

  std::optional<std::string> last_block;
  bool inside = false;
  std::vector<std::string_view> current;
  auto close_block = [&] {
    std::string body;
    for (std::size_t i = 0; i < current.size(); ++i) {
      if (i) body += '\n';
      body += current[i];
    }
    if (!text::trim(body).empty()) last_block = std::move(body);
    current.clear();
  };
  for (auto line : all) {
    if (text::trim_left(line).starts_with("```")) {
      if (inside) close_block();
      inside = !inside;
      continue;
    }
    if (inside) current.push_back(line);
  }
  if (inside) close_block();
  if (last_block) return {std::string(reply_text), std::move(*last_block), ExtractionMethod::fenced_block};

  for (std::size_t i = 0; i < all.size(); ++i) {
    if (text::trim(all[i]) != "CODE:") continue;
    std::string body;
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      if (j > i + 1) body += '\n';
      body += all[j];
    }
    auto trimmed = text::trim(body);
    if (trimmed.empty()) break;
    return {std::string(reply_text), std::string(trimmed), ExtractionMethod::code_marker};
  }
  throw NoCodeFound(std::string(reply_text));
}

CodeGeneration generate_code(std::string_view request_text, const RetrievalResult& retrieval,
                             const ChatHistory& history, const SchemeConfig& scheme, ChatProvider& llm,
                             const ReasonerPromptTemplate& tmpl, CostLedger& ledger) {
  CodeGeneration out;
  out.prompt = assemble_coder_prompt(tmpl, request_text, retrieval, history, scheme);
  ChatReply reply = llm.chat(out.prompt, ChatParams{});
  reply.usage.call_kind = CallKind::code;
  ledger.append(reply.usage);
  out.usage = reply.usage;
  try {
    out.code = extract_code(reply.text);
  } catch (const NoCodeFound&) {
    throw NoCodeFound(std::move(reply.text), reply.usage);
  }
  return out;
}

}  // namespace simagent
