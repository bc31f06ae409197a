#include "simagent/sim_environment.hpp"

#include <algorithm>
#include <cctype>

#include "simagent/text.hpp"

namespace simagent {

std::string_view to_string(ErrorReportingQuality q) {
  return q == ErrorReportingQuality::poor ? "poor" : "well_developed";
}

ErrorReportingQuality quality_from_string(std::string_view s) {
  if (s == "poor") return ErrorReportingQuality::poor;
  if (s == "well_developed") return ErrorReportingQuality::well_developed;
  throw std::invalid_argument("unknown error-reporting quality: " + std::string(s));
}

namespace {
constexpr std::pair<ErrorKind, std::string_view> kErrorKindNames[] = {
    {ErrorKind::none, "none"},
    {ErrorKind::unknown_function, "unknown_function"},
    {ErrorKind::arity_mismatch, "arity_mismatch"},
    {ErrorKind::unknown_option, "unknown_option"},
    {ErrorKind::syntax_error, "syntax_error"},
    {ErrorKind::no_code_found, "no_code_found"},
    {ErrorKind::provider_error, "provider_error"},
    {ErrorKind::tool_error, "tool_error"},
    {ErrorKind::unspecified, "unspecified"},
};
}  // namespace

std::string_view to_string(ErrorKind k) {
  for (auto [kind, name] : kErrorKindNames)
    if (kind == k) return name;
  return "unspecified";
}

ErrorKind error_kind_from_string(std::string_view s) {
  for (auto [kind, name] : kErrorKindNames)
    if (name == s) return kind;
  throw std::invalid_argument("unknown error kind: " + std::string(s));
}

ExecutionOutcome ExecutionOutcome::failure(ErrorKind kind, std::string message, std::optional<int> line) {
  ExecutionOutcome o;
  o.status = ExecutionStatus::error;
  o.error_kind = kind;
  o.error_message = std::move(message);
  o.error_line = line;
  return o;
}

ExecutionOutcome ExecutionOutcome::no_code_found() {
  return failure(ErrorKind::no_code_found,
                 "NoCodeFound: the reply contained no fenced code block and no CODE: marker");
}

bool detect_error(const ExecutionOutcome& outcome) { return outcome.status == ExecutionStatus::error; }

ExecutionOutcome apply_quality(ExecutionOutcome outcome, ErrorReportingQuality quality) {
  if (quality == ErrorReportingQuality::poor && outcome.status == ExecutionStatus::error) {
    outcome.error_message = std::string(kGenericExecutionError);
    outcome.error_line.reset();
    outcome.error_kind = ErrorKind::unspecified;
  }
  return outcome;
}

// ---------------------------------------------------------------------------

SpecParseError::SpecParseError(std::size_t line, const std::string& reason)
    : EnvironmentSpecError("environment spec line " + std::to_string(line) + ": " + reason), line_(line) {}

DanglingDependency::DanglingDependency(std::string option, std::string function)
    : EnvironmentSpecError("option '" + option + "' depends on undeclared function '" + function + "'"),
      option_(std::move(option)),
      function_(std::move(function)) {}

namespace {

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  const auto first = static_cast<unsigned char>(s.front());
  if (!(std::isalpha(first) || first == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char ch) {
    const auto c = static_cast<unsigned char>(ch);
    return std::isalnum(c) || c == '_' || c == '.';
  });
}

int parse_arity(std::string_view s, std::size_t line) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw SpecParseError(line, "arity must be a nonnegative integer, got '" + std::string(s) + "'");
  return std::stoi(std::string(s));
}

}  // namespace

EnvironmentSpec load_environment_spec(std::string_view text_in) {
  EnvironmentSpec spec;
  std::size_t line_no = 0;
  for (auto raw : text::lines(text_in)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (line.starts_with("function ") || line.starts_with("function\t")) {
      std::vector<std::string_view> words;
      for (auto w : text::split(line, ' '))
        if (!text::trim(w).empty()) words.push_back(text::trim(w));
      if (words.size() != 4) throw SpecParseError(line_no, "expected 'function <name> <min> <max>'");
      if (!valid_name(words[1])) throw SpecParseError(line_no, "bad function name '" + std::string(words[1]) + "'");
      FunctionSignature sig{parse_arity(words[2], line_no), parse_arity(words[3], line_no)};
      if (sig.min_arity > sig.max_arity) throw SpecParseError(line_no, "min arity exceeds max arity");
      if (!spec.functions.emplace(std::string(words[1]), sig).second)
        throw SpecParseError(line_no, "duplicate function '" + std::string(words[1]) + "'");
      continue;
    }
    if (line.starts_with("option ") || line.starts_with("option\t")) {
      auto fields = text::split(line.substr(7), '|');
      if (fields.size() != 4) throw SpecParseError(line_no, "expected 'option <name> | <default> | <deps> | <domain>'");
      const std::string name(text::trim(fields[0]));
      if (!valid_name(name)) throw SpecParseError(line_no, "bad option name '" + name + "'");
      OptionSpec opt;
      opt.default_value = std::string(text::trim(fields[1]));
      for (auto dep : text::split(fields[2], ',')) {
        auto d = text::trim(dep);
        if (!d.empty()) opt.dependencies.emplace(d);
      }
      if (opt.dependencies.empty()) throw SpecParseError(line_no, "option '" + name + "' has no dependencies");
      opt.value_domain = std::string(text::trim(fields[3]));
      if (!spec.options.emplace(name, std::move(opt)).second)
        throw SpecParseError(line_no, "duplicate option '" + name + "'");
      continue;
    }
    throw SpecParseError(line_no, "unrecognized line");
  }
  for (const auto& [name, opt] : spec.options)
    for (const auto& dep : opt.dependencies)
      if (!spec.functions.contains(dep)) throw DanglingDependency(name, dep);
  return spec;
}

// ---------------------------------------------------------------------------

namespace {

struct Call {
  std::string function;
  std::vector<std::string> args;
  std::map<std::string, std::string> consumed;
};

ExecutionOutcome interpret(const EnvironmentSpec& spec, std::string_view code) {
  std::map<std::string, std::string> current;  // option -> value
  std::set<std::string> set_names;
  std::set<std::string> consumed_names;
  std::vector<Call> calls;

  int line_no = 0;
  for (auto raw : text::lines(code)) {
    ++line_no;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.back() == ';') line = text::trim(line.substr(0, line.size() - 1));

    const auto syntax_error = [&] {
      return ExecutionOutcome::failure(ErrorKind::syntax_error,
                                       "SyntaxError: cannot parse '" + std::string(line) + "'", line_no);
    };

    if (line.starts_with("set ") || line.starts_with("set\t")) {
      auto rest = line.substr(4);
      auto eq = rest.find('=');
      if (eq == std::string_view::npos) return syntax_error();
      const auto name = text::trim(rest.substr(0, eq));
      const auto value = text::trim(rest.substr(eq + 1));
      if (!valid_name(name) || value.empty()) return syntax_error();
      if (!spec.options.contains(name))
        return ExecutionOutcome::failure(ErrorKind::unknown_option, "UnknownOption " + std::string(name), line_no);
      current[std::string(name)] = std::string(value);
      set_names.emplace(name);
      continue;
    }

    const auto open = line.find('(');
    if (open == std::string_view::npos || line.back() != ')') return syntax_error();
    const auto name = text::trim(line.substr(0, open));
    const auto inner = line.substr(open + 1, line.size() - open - 2);
    if (!valid_name(name) || inner.find_first_of("()") != std::string_view::npos) return syntax_error();

    Call call;
    call.function = std::string(name);
    if (!text::trim(inner).empty()) {
      for (auto a : text::split(inner, ',')) {
        auto arg = text::trim(a);
        if (arg.empty()) return syntax_error();
        call.args.emplace_back(arg);
      }
    }
    auto fn = spec.functions.find(name);
    if (fn == spec.functions.end())
      return ExecutionOutcome::failure(ErrorKind::unknown_function, "UnknownFunction " + call.function, line_no);
    const int argc = static_cast<int>(call.args.size());
    if (argc < fn->second.min_arity || argc > fn->second.max_arity) {
      return ExecutionOutcome::failure(
          ErrorKind::arity_mismatch,
          "ArityMismatch " + call.function + ": expects " + std::to_string(fn->second.min_arity) + ".." +
              std::to_string(fn->second.max_arity) + " arguments, got " + std::to_string(argc),
          line_no);
    }
    for (const auto& [opt, value] : current) {
      if (spec.options.find(opt)->second.dependencies.contains(call.function)) {
        call.consumed.emplace(opt, value);
        consumed_names.insert(opt);
      }
    }
    calls.push_back(std::move(call));
  }

  ExecutionOutcome out;
  std::vector<std::string> rendered;
  for (const auto& c : calls) {
    std::string s = c.function + "(" + text::join(c.args, ",") + "){";
    bool first = true;
    for (const auto& [opt, value] : c.consumed) {  // std::map keeps names sorted
      if (!first) s += ',';
      s += opt + "=" + value;
      first = false;
    }
    s += '}';
    rendered.push_back(std::move(s));
  }
  out.result_canonical = text::join(rendered, "\n");
  std::set_difference(set_names.begin(), set_names.end(), consumed_names.begin(), consumed_names.end(),
                      std::inserter(out.irrelevant_options, out.irrelevant_options.end()));
  return out;
}

}  // namespace

ExecutionOutcome execute(const EnvironmentSpec& spec, std::string_view code, ErrorReportingQuality quality) {
  return apply_quality(interpret(spec, code), quality);
}

ExecutionOutcome MiniGridEnvironment::run(std::string_view code, ErrorReportingQuality quality) const {
  return execute(spec_, code, quality);
}

std::string MiniGridEnvironment::describe() const {
  return "minigrid (" + std::to_string(spec_.functions.size()) + " functions, " +
         std::to_string(spec_.options.size()) + " options)";
}

}  // namespace simagent
