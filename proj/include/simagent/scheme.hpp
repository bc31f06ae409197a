#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "simagent/sim_environment.hpp"

namespace simagent {

enum class RagMode { proposed, standard, none };
std::string_view to_string(RagMode m);
RagMode rag_mode_from_string(std::string_view s);

/// Which framework strategies are active for a run.
struct SchemeConfig {
  std::string name;
  bool query_planning = false;
  bool triple_doc = false;
  bool cot = false;
  bool few_shot = false;
  bool static_knowledge = false;
  bool feedback = false;
  RagMode rag_mode = RagMode::none;
  ErrorReportingQuality error_reporting = ErrorReportingQuality::well_developed;
  int n_max = 3;
  std::string note;  // free text, e.g. why an encoding is approximate

  bool operator==(const SchemeConfig&) const = default;
};

class SchemeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws SchemeError unless n_max >= 1 and query planning implies the
/// proposed retrieval mode.
void validate(const SchemeConfig& scheme);

/// The thirteen evaluated strategy combinations, in column order:
/// GPT4o-Full, -PR, -RSR, -SR, -Sole, -NC, -NP, -NS, -NR, -NCS, -RSRNW,
/// CGPT4o-R and o1p-Sole.
std::vector<SchemeConfig> builtin_schemes(int n_max = 3);

/// JSON array of scheme objects with the SchemeConfig field names.
std::vector<SchemeConfig> parse_schemes(std::string_view json_text);
std::string schemes_to_json(const std::vector<SchemeConfig>& schemes);

/// Throws SchemeError listing the available names when `name` is unknown.
const SchemeConfig& find_scheme(const std::vector<SchemeConfig>& schemes, std::string_view name);

}  // namespace simagent
