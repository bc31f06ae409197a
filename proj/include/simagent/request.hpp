#pragma once

#include <set>
#include <string>
#include <string_view>

namespace simagent {

enum class Complexity { standard, complex };
std::string_view to_string(Complexity c);
Complexity complexity_from_string(std::string_view s);

/// Known-correct outcome for a benchmark task: the canonical call listing the
/// environment must produce.
struct ExpectedResult {
  std::string canonical;
  std::set<std::string> required_options;

  bool operator==(const ExpectedResult&) const = default;
};

struct SimulationRequest {
  std::string id;
  std::string text;
  Complexity complexity = Complexity::standard;
  ExpectedResult expected;  // only used by evaluation
};

}  // namespace simagent
