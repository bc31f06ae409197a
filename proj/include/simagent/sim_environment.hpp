#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Executor boundary. MiniGrid is a small deterministic scripting language that
// stands in for a real simulation tool: it knows which functions exist, their
// arity, and which functions consume which options.
namespace simagent {

enum class ErrorReportingQuality { well_developed, poor };
std::string_view to_string(ErrorReportingQuality q);
ErrorReportingQuality quality_from_string(std::string_view s);

/// The message every error collapses to under poor error reporting.
inline constexpr std::string_view kGenericExecutionError = "execution failed";

enum class ErrorKind {
  none,
  unknown_function,
  arity_mismatch,
  unknown_option,
  syntax_error,
  no_code_found,
  provider_error,
  tool_error,   // reported by an external tool adapter
  unspecified,  // masked by poor error reporting
};
std::string_view to_string(ErrorKind k);
ErrorKind error_kind_from_string(std::string_view s);

enum class ExecutionStatus { success, error };

struct ExecutionOutcome {
  ExecutionStatus status = ExecutionStatus::success;
  std::string result_canonical;             // success only
  std::set<std::string> irrelevant_options;  // set but consumed by no call
  std::string error_message;                // error only
  std::optional<int> error_line;
  ErrorKind error_kind = ErrorKind::none;

  static ExecutionOutcome failure(ErrorKind kind, std::string message, std::optional<int> line = std::nullopt);
  /// Stand-in outcome for a model reply that contained no code.
  static ExecutionOutcome no_code_found();

  bool operator==(const ExecutionOutcome&) const = default;
};

bool detect_error(const ExecutionOutcome& outcome);

/// Under poor quality every error keeps its status but loses its line, kind
/// and message. Success outcomes pass through untouched.
ExecutionOutcome apply_quality(ExecutionOutcome outcome, ErrorReportingQuality quality);

struct FunctionSignature {
  int min_arity = 0;
  int max_arity = 0;
};

struct OptionSpec {
  std::string default_value;
  std::set<std::string> dependencies;  // functions that consume the option
  std::string value_domain;
};

struct EnvironmentSpec {
  std::map<std::string, FunctionSignature, std::less<>> functions;
  std::map<std::string, OptionSpec, std::less<>> options;
};

class EnvironmentSpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SpecParseError : public EnvironmentSpecError {
 public:
  SpecParseError(std::size_t line, const std::string& reason);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DanglingDependency : public EnvironmentSpecError {
 public:
  DanglingDependency(std::string option, std::string function);
  const std::string& option() const noexcept { return option_; }
  const std::string& function() const noexcept { return function_; }

 private:
  std::string option_;
  std::string function_;
};

/// Line forms:
///   function <name> <min_arity> <max_arity>
///   option <name> | <default> | <dep1, dep2, ...> | <domain description>
/// `#` comments and blank lines are skipped.
EnvironmentSpec load_environment_spec(std::string_view text);

/// Interprets a MiniGrid script. `set <option> = <value>` records an option;
/// `<function>(<arg>, ...)` calls a function, which consumes every currently
/// set option that lists it as a dependency. Stops at the first bad line.
ExecutionOutcome execute(const EnvironmentSpec& spec, std::string_view code, ErrorReportingQuality quality);

class SimulationEnvironment {
 public:
  virtual ~SimulationEnvironment() = default;
  virtual ExecutionOutcome run(std::string_view code, ErrorReportingQuality quality) const = 0;
  virtual std::string describe() const = 0;
};

class MiniGridEnvironment final : public SimulationEnvironment {
 public:
  explicit MiniGridEnvironment(EnvironmentSpec spec) : spec_(std::move(spec)) {}
  ExecutionOutcome run(std::string_view code, ErrorReportingQuality quality) const override;
  std::string describe() const override;
  const EnvironmentSpec& spec() const noexcept { return spec_; }

 private:
  EnvironmentSpec spec_;
};

/// Adapter for an external tool. The script is written to a temporary file
/// whose path is appended to `command`; the process's combined stdout/stderr
/// is the result. A line starting with `EXEC_ERROR:` marks an error and the
/// rest of that line is the message. A nonzero exit status or exceeding the
/// wall-clock cap is also an error.
class SubprocessEnvironment final : public SimulationEnvironment {
 public:
  static constexpr std::string_view kErrorSentinel = "EXEC_ERROR:";

  SubprocessEnvironment(std::vector<std::string> command, std::chrono::milliseconds wall_clock_cap);
  ExecutionOutcome run(std::string_view code, ErrorReportingQuality quality) const override;
  std::string describe() const override;

 private:
  std::vector<std::string> command_;
  std::chrono::milliseconds cap_;
};

}  // namespace simagent
