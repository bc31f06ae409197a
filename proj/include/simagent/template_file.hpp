#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Prompt templates are plain text split into named sections:
//
//   [instructions]
//   free text ...
//   [example.request]
//   ...
//
// A section header is a line holding only `[name]`. Names may repeat; order
// is preserved. Slots inside bodies are written `{{name}}`.
namespace simagent {

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TemplateSlotMissing : public TemplateError {
 public:
  TemplateSlotMissing(std::string section, std::string slot);
  const std::string& slot() const noexcept { return slot_; }

 private:
  std::string slot_;
};

struct TemplateSection {
  std::string name;
  std::string body;
};

std::vector<TemplateSection> parse_template_sections(std::string_view text);

std::size_t count_slot(std::string_view body, std::string_view slot);

/// Replaces the single `{{slot}}` occurrence; throws TemplateSlotMissing unless
/// it occurs exactly once.
std::string fill_slot(std::string_view body, std::string_view slot, std::string_view value,
                      std::string_view section_name);

}  // namespace simagent
