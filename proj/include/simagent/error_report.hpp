#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>

#include "simagent/llm_gateway.hpp"
#include "simagent/sim_environment.hpp"

namespace simagent {

/// Placeholder for an empty report section.
inline constexpr std::string_view kEmptySectionMarker = "(none)";

inline constexpr std::array<std::string_view, 6> kErrorReportHeaders = {
    "### Problematic Code", "### Error Message", "### General Hints",
    "### Request",          "### Reminders",     "### Chat History",
};

/// Static guidance per error kind. Keys are ErrorKind names such as
/// "unknown_option"; `generic` covers everything else.
struct HintsConfig {
  std::map<std::string, std::string, std::less<>> by_kind;
  std::string generic = "Check every function name, argument count and option name against the retrieved documentation.";
  std::string reminders;

  /// {"generic": "...", "reminders": "...", "hints": {"unknown_option": "...", ...}}
  static HintsConfig from_json(std::string_view json_text);
};

/// The correction package fed back to the agents after a failed execution.
struct ErrorReport {
  std::string problematic_code;
  std::string error_message;
  std::string general_hints;
  std::string correction_request;
  std::string reminders;
  ChatHistory chat_history;
};

/// Error message with its line appended when known, e.g.
/// "UnknownOption opt.pf.tolerance (line 1)".
std::string describe_error(const ExecutionOutcome& outcome);

/// `outcome` must be an error.
ErrorReport build_error_report(std::string_view code, const ExecutionOutcome& outcome, const HintsConfig& hints,
                               const ChatHistory& history);

/// Six headed sections in fixed order. The chat history section lists each
/// earlier message shortened to one line; the full messages travel alongside
/// the report in the conversation.
std::string render_error_report(const ErrorReport& report);

}  // namespace simagent
