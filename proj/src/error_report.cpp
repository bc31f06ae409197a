#include "simagent/error_report.hpp"

#include <json.hpp>

#include "simagent/text.hpp"

namespace simagent {

HintsConfig HintsConfig::from_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("hints file is not valid JSON: ") + e.what());
  }
  HintsConfig cfg;
  if (doc.contains("generic")) cfg.generic = doc["generic"].get<std::string>();
  if (doc.contains("reminders")) cfg.reminders = doc["reminders"].get<std::string>();
  if (doc.contains("hints")) {
    for (const auto& [kind, hint] : doc["hints"].items()) {
      error_kind_from_string(kind);  // reject typos early
      cfg.by_kind.emplace(kind, hint.get<std::string>());
    }
  }
  return cfg;
}

std::string describe_error(const ExecutionOutcome& outcome) {
  std::string msg = outcome.error_message;
  if (outcome.error_line) msg += " (line " + std::to_string(*outcome.error_line) + ")";
  return msg;
}

ErrorReport build_error_report(std::string_view code, const ExecutionOutcome& outcome, const HintsConfig& hints,
                               const ChatHistory& history) {
  ErrorReport r;
  r.problematic_code = std::string(code);
  r.error_message = describe_error(outcome);
  auto hint = hints.by_kind.find(to_string(outcome.error_kind));
  r.general_hints = hint != hints.by_kind.end() ? hint->second : hints.generic;
  r.correction_request = "The code above failed with: " + r.error_message +
                         "\nRevise the code so that it resolves this error while still fulfilling the original "
                         "simulation request. Return the complete corrected script in one fenced code block.";
  r.reminders = text::trim(hints.reminders).empty() ? std::string(kEmptySectionMarker) : hints.reminders;
  r.chat_history = history;
  return r;
}

namespace {

std::string one_line(std::string_view s, std::size_t max_chars) {
  std::string out;
  for (char c : s) {
    if (out.size() >= max_chars) {
      out += "...";
      break;
    }
    out += (c == '\n' || c == '\r' || c == '\t') ? ' ' : c;
  }
  return out;
}

void section(std::string& out, std::string_view header, std::string_view body) {
  out += header;
  out += '\n';
  out += text::trim(body).empty() ? kEmptySectionMarker : body;
  out += "\n\n";
}

}  // namespace

std::string render_error_report(const ErrorReport& report) {
  std::string out;
  const std::string code =
      text::trim(report.problematic_code).empty() ? std::string() : "```\n" + report.problematic_code + "\n```";
  section(out, kErrorReportHeaders[0], code);
  section(out, kErrorReportHeaders[1], report.error_message);
  section(out, kErrorReportHeaders[2], report.general_hints);
  section(out, kErrorReportHeaders[3], report.correction_request);
  section(out, kErrorReportHeaders[4], report.reminders);

  std::string history;
  for (const auto& m : report.chat_history) {
    history += "- [" + std::string(to_string(m.role)) + "] " + one_line(m.content, 160) + "\n";
  }
  if (!history.empty()) history.pop_back();
  section(out, kErrorReportHeaders[5], history);
  out.resize(out.size() - 1);  // single trailing newline
  return out;
}

}  // namespace simagent
