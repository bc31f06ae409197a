#include "simagent/template_file.hpp"

#include "simagent/text.hpp"

namespace simagent {

TemplateSlotMissing::TemplateSlotMissing(std::string section, std::string slot)
    : TemplateError("template section [" + section + "] must contain {{" + slot + "}} exactly once"),
      slot_(std::move(slot)) {}

namespace {

bool is_header(std::string_view line, std::string& name) {
  line = text::trim(line);
  if (line.size() < 3 || line.front() != '[' || line.back() != ']') return false;
  auto inner = line.substr(1, line.size() - 2);
  for (char c : inner) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '.' || c == '-';
    if (!ok) return false;
  }
  name = std::string(inner);
  return true;
}

// Strips leading and trailing blank lines but keeps indentation.
std::string tidy_body(const std::vector<std::string_view>& body_lines) {
  std::size_t b = 0, e = body_lines.size();
  while (b < e && text::trim(body_lines[b]).empty()) ++b;
  while (e > b && text::trim(body_lines[e - 1]).empty()) --e;
  std::string out;
  for (std::size_t i = b; i < e; ++i) {
    if (i > b) out += '\n';
    out += body_lines[i];
  }
  return out;
}

}  // namespace

std::vector<TemplateSection> parse_template_sections(std::string_view text_in) {
  std::vector<TemplateSection> sections;
  std::vector<std::string_view> body;
  std::string current;
  bool in_section = false;
  std::size_t line_no = 0;
  for (auto line : text::lines(text_in)) {
    ++line_no;
    std::string name;
    if (is_header(line, name)) {
      if (in_section) sections.push_back({current, tidy_body(body)});
      current = std::move(name);
      body.clear();
      in_section = true;
      continue;
    }
    if (!in_section) {
      if (!text::trim(line).empty())
        throw TemplateError("template line " + std::to_string(line_no) + ": text before the first [section]");
      continue;
    }
    body.push_back(line);
  }
  if (in_section) sections.push_back({current, tidy_body(body)});
  return sections;
}

std::size_t count_slot(std::string_view body, std::string_view slot) {
  const std::string token = "{{" + std::string(slot) + "}}";
  std::size_t n = 0;
  for (auto pos = body.find(token); pos != std::string_view::npos; pos = body.find(token, pos + token.size()))
    ++n;
  return n;
}

std::string fill_slot(std::string_view body, std::string_view slot, std::string_view value,
                      std::string_view section_name) {
  if (count_slot(body, slot) != 1) throw TemplateSlotMissing(std::string(section_name), std::string(slot));
  const std::string token = "{{" + std::string(slot) + "}}";
  const auto pos = body.find(token);
  std::string out;
  out.reserve(body.size() + value.size());
  out.append(body.substr(0, pos));
  out.append(value);
  out.append(body.substr(pos + token.size()));
  return out;
}

}  // namespace simagent
