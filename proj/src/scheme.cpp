#include "simagent/scheme.hpp"

#include <json.hpp>

namespace simagent {

std::string_view to_string(RagMode m) {
  switch (m) {
    case RagMode::proposed: return "proposed";
    case RagMode::standard: return "standard";
    case RagMode::none: return "none";
  }
  return "none";
}

RagMode rag_mode_from_string(std::string_view s) {
  if (s == "proposed") return RagMode::proposed;
  if (s == "standard") return RagMode::standard;
  if (s == "none") return RagMode::none;
  throw SchemeError("unknown rag_mode '" + std::string(s) + "'");
}

void validate(const SchemeConfig& scheme) {
  if (scheme.name.empty()) throw SchemeError("scheme needs a name");
  if (scheme.n_max < 1) throw SchemeError("scheme " + scheme.name + ": n_max must be at least 1");
  if (scheme.query_planning && scheme.rag_mode != RagMode::proposed)
    throw SchemeError("scheme " + scheme.name + ": query planning requires rag_mode=proposed");
}

namespace {

struct Row {
  const char* name;
  bool query_planning, triple_doc, cot, few_shot, static_knowledge, feedback;
  RagMode rag;
  bool well_developed_errors;
  const char* note;
};

// Columns of the evaluated-scheme matrix.
constexpr Row kTable[] = {
    //  name           QP     TD     CoT    FS     SK     FB    RAG                 EWD
    {"GPT4o-Full",   true,  true,  true,  true,  true,  true, RagMode::proposed, true,  ""},
    {"GPT4o-PR",     true,  true,  false, false, false, true, RagMode::proposed, true,  ""},
    {"GPT4o-RSR",    false, true,  true,  true,  true,  true, RagMode::standard, true,  ""},
    {"GPT4o-SR",     false, true,  false, false, false, true, RagMode::standard, true,  ""},
    {"GPT4o-Sole",   false, false, false, false, false, true, RagMode::none,     true,  ""},
    {"GPT4o-NC",     true,  true,  false, true,  true,  true, RagMode::proposed, true,  ""},
    {"GPT4o-NP",     true,  false, true,  true,  true,  true, RagMode::proposed, true,  ""},
    {"GPT4o-NS",     true,  true,  true,  false, true,  true, RagMode::proposed, true,  ""},
    {"GPT4o-NR",     false, false, true,  true,  true,  true, RagMode::none,     true,  ""},
    {"GPT4o-NCS",    true,  true,  false, false, true,  true, RagMode::proposed, true,  ""},
    {"GPT4o-RSRNW",  true,  true,  true,  true,  true,  true, RagMode::proposed, false, ""},
    {"CGPT4o-R",     false, true,  false, false, false, true, RagMode::standard, true,
     "vendor built-in retrieval approximated by standard whole-request retrieval"},
    {"o1p-Sole",     false, false, false, false, false, true, RagMode::none,     true,
     "originally a different model; flags only"},
};

}  // namespace

std::vector<SchemeConfig> builtin_schemes(int n_max) {
  std::vector<SchemeConfig> out;
  for (const auto& r : kTable) {
    SchemeConfig s;
    s.name = r.name;
    s.query_planning = r.query_planning;
    s.triple_doc = r.triple_doc;
    s.cot = r.cot;
    s.few_shot = r.few_shot;
    s.static_knowledge = r.static_knowledge;
    s.feedback = r.feedback;
    s.rag_mode = r.rag;
    s.error_reporting = r.well_developed_errors ? ErrorReportingQuality::well_developed : ErrorReportingQuality::poor;
    s.n_max = n_max;
    s.note = r.note;
    validate(s);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

using json = nlohmann::json;

SchemeConfig scheme_from_json(const json& j) {
  SchemeConfig s;
  try {
    s.name = j.at("name").get<std::string>();
    s.query_planning = j.value("query_planning", false);
    s.triple_doc = j.value("triple_doc", false);
    s.cot = j.value("cot", false);
    s.few_shot = j.value("few_shot", false);
    s.static_knowledge = j.value("static_knowledge", false);
    s.feedback = j.value("feedback", false);
    s.rag_mode = rag_mode_from_string(j.value("rag_mode", std::string("none")));
    s.error_reporting = quality_from_string(j.value("error_reporting", std::string("well_developed")));
    s.n_max = j.value("n_max", 3);
    s.note = j.value("note", std::string());
  } catch (const json::exception& e) {
    throw SchemeError(std::string("bad scheme entry: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemeError(e.what());
  }
  validate(s);
  return s;
}

}  // namespace

std::vector<SchemeConfig> parse_schemes(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw SchemeError(std::string("scheme file is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw SchemeError("scheme file must hold a JSON array");
  std::vector<SchemeConfig> out;
  for (const auto& j : doc) {
    auto s = scheme_from_json(j);
    for (const auto& existing : out)
      if (existing.name == s.name) throw SchemeError("duplicate scheme name " + s.name);
    out.push_back(std::move(s));
  }
  return out;
}

std::string schemes_to_json(const std::vector<SchemeConfig>& schemes) {
  json arr = json::array();
  for (const auto& s : schemes) {
    json j{{"name", s.name},
           {"query_planning", s.query_planning},
           {"triple_doc", s.triple_doc},
           {"cot", s.cot},
           {"few_shot", s.few_shot},
           {"static_knowledge", s.static_knowledge},
           {"feedback", s.feedback},
           {"rag_mode", std::string(to_string(s.rag_mode))},
           {"error_reporting", std::string(to_string(s.error_reporting))},
           {"n_max", s.n_max}};
    if (!s.note.empty()) j["note"] = s.note;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

const SchemeConfig& find_scheme(const std::vector<SchemeConfig>& schemes, std::string_view name) {
  for (const auto& s : schemes)
    if (s.name == name) return s;
  std::string available;
  for (const auto& s : schemes) available += (available.empty() ? "" : ", ") + s.name;
  throw SchemeError("unknown scheme '" + std::string(name) + "'; available: " + available);
}

}  // namespace simagent
