#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "simagent/llm_gateway.hpp"
#include "simagent/orchestrator.hpp"
#include "simagent/request.hpp"
#include "simagent/scheme.hpp"

// Benchmark harness: 100/50/0 attempt scoring with inheritance of the last
// score into unused attempts, success-rate breakdowns, traces and rescoring.
namespace simagent {

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An attempt follows one that executed without error, or there are more
/// attempts than n_max.
class RetryRuleViolation : public EvaluationError {
 public:
  using EvaluationError::EvaluationError;
};

class EmptySuite : public EvaluationError {
 public:
  EmptySuite() : EvaluationError("task suite is empty") {}
};

class SuiteParseError : public EvaluationError {
 public:
  SuiteParseError(std::size_t line, const std::string& reason);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class TraceParseError : public EvaluationError {
 public:
  TraceParseError(std::size_t line, const std::string& reason);
};

inline constexpr int kFullPoints = 100;
inline constexpr int kIrrelevantSettingPoints = 50;

/// 100 for a matching result with no stray settings, 50 when some option was
/// set that no call consumed, 0 for errors and mismatches.
int score_attempt(const ExecutionOutcome& outcome, const ExpectedResult& expected);

/// Per-slot scores, n_max long: each attempt's score, then the last score
/// repeated into the unused slots.
std::vector<int> slot_scores(std::span<const ExecutionOutcome> outcomes, const ExpectedResult& expected, int n_max);

/// Sum of slot_scores.
int score_task(std::span<const ExecutionOutcome> outcomes, const ExpectedResult& expected, int n_max);
int score_task(const std::vector<AttemptRecord>& attempts, const ExpectedResult& expected, int n_max);

/// 100 * sum / (count * 100 * n_max). Throws EmptySuite on an empty list.
double success_rate(std::span<const int> task_points, int n_max);

struct TaskScore {
  std::string request_id;
  Complexity complexity = Complexity::standard;
  TerminalStatus terminal_status = TerminalStatus::exhausted;
  std::size_t attempts = 0;
  std::vector<int> slots;
  int points = 0;
  int first_points = 0;  // attempt-1 score in every slot
  int final_points = 0;  // terminal score in every slot
  CostSummary cost;
  double wall_time = 0.0;
  std::string failure_reason;
};

struct ScoreReport {
  std::string scheme;
  int n_max = 3;
  std::vector<TaskScore> tasks;  // sorted by request id
  double success_rate_all = 0.0;
  std::optional<double> success_rate_complex;  // absent without such tasks
  std::optional<double> success_rate_standard;
  double first_attempt_rate = 0.0;
  double final_attempt_rate = 0.0;
  CostRow average_cost;  // per-task averages, labelled with the scheme
};

/// Deterministic fold over task results; order of `results` is irrelevant.
ScoreReport build_score_report(const SchemeConfig& scheme, const std::vector<TaskResult>& results,
                               const std::vector<SimulationRequest>& suite);

struct BenchmarkRun {
  SchemeConfig scheme;
  std::vector<SimulationRequest> suite;
  std::vector<TaskResult> results;  // sorted by request id
  ScoreReport report;
};

/// Runs every request through run_task on `workers` threads. A task that
/// throws is recorded as a single failed attempt with the reason kept.
BenchmarkRun run_benchmark(const std::vector<SimulationRequest>& suite, const SchemeConfig& scheme,
                           const TaskContext& ctx, std::size_t workers = 1);

/// One JSON object per line:
///   {"id", "complexity", "request", "expected", "required_options"}.
/// Blank lines and lines starting with '#' are skipped.
std::vector<SimulationRequest> parse_suite(std::string_view jsonl);

/// JSON-lines trace of one or more runs: a "run" record with the scheme, then
/// per task a "task" record followed by its "attempt" records. Holds
/// everything scoring needs, so rescoring never calls a provider. Reports are
/// left empty on read; call rescore.
std::string write_trace(const std::vector<BenchmarkRun>& runs);
std::vector<BenchmarkRun> read_trace(std::string_view jsonl);

/// Re-derives every report from the persisted runs.
std::vector<ScoreReport> rescore(const std::vector<BenchmarkRun>& runs);

/// Machine-readable tab-separated tables (summary, then per task), followed by
/// a human summary section per scheme and the cost table.
std::string format_reports(const std::vector<ScoreReport>& reports);

}  // namespace simagent
