#include "simagent/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <thread>

#include <json.hpp>

#include "simagent/text.hpp"

namespace simagent {

using json = nlohmann::json;

SuiteParseError::SuiteParseError(std::size_t line, const std::string& reason)
    : EvaluationError("suite line " + std::to_string(line) + ": " + reason), line_(line) {}

TraceParseError::TraceParseError(std::size_t line, const std::string& reason)
    : EvaluationError("trace line " + std::to_string(line) + ": " + reason) {}

int score_attempt(const ExecutionOutcome& outcome, const ExpectedResult& expected) {
  if (detect_error(outcome)) return 0;
  if (outcome.result_canonical != expected.canonical) return 0;
  return outcome.irrelevant_options.empty() ? kFullPoints : kIrrelevantSettingPoints;
}

std::vector<int> slot_scores(std::span<const ExecutionOutcome> outcomes, const ExpectedResult& expected, int n_max) {
  if (n_max < 1) throw RetryRuleViolation("n_max must be at least 1");
  if (outcomes.empty()) throw RetryRuleViolation("task has no attempts");
  if (outcomes.size() > static_cast<std::size_t>(n_max))
    throw RetryRuleViolation(std::to_string(outcomes.size()) + " attempts exceed n_max=" + std::to_string(n_max));
  for (std::size_t i = 0; i + 1 < outcomes.size(); ++i)
    if (!detect_error(outcomes[i]))
      throw RetryRuleViolation("attempt " + std::to_string(i + 2) + " follows an attempt that executed cleanly");
  std::vector<int> slots;
  slots.reserve(static_cast<std::size_t>(n_max));
  for (const auto& o : outcomes) slots.push_back(score_attempt(o, expected));
  slots.resize(static_cast<std::size_t>(n_max), slots.back());
  return slots;
}

int score_task(std::span<const ExecutionOutcome> outcomes, const ExpectedResult& expected, int n_max) {
  int sum = 0;
  for (int s : slot_scores(outcomes, expected, n_max)) sum += s;
  return sum;
}

int score_task(const std::vector<AttemptRecord>& attempts, const ExpectedResult& expected, int n_max) {
  std::vector<ExecutionOutcome> outcomes;
  outcomes.reserve(attempts.size());
  for (const auto& a : attempts) outcomes.push_back(a.outcome);
  return score_task(outcomes, expected, n_max);
}

double success_rate(std::span<const int> task_points, int n_max) {
  if (task_points.empty()) throw EmptySuite();
  if (n_max < 1) throw EvaluationError("n_max must be at least 1");
  const long long max_per_task = 100LL * n_max;
  long long sum = 0;
  for (int p : task_points) {
    if (p < 0 || p > max_per_task)
      throw EvaluationError("task points " + std::to_string(p) + " outside [0, " + std::to_string(max_per_task) + "]");
    sum += p;
  }
  return 100.0 * static_cast<double>(sum) / static_cast<double>(static_cast<long long>(task_points.size()) * max_per_task);
}

ScoreReport build_score_report(const SchemeConfig& scheme, const std::vector<TaskResult>& results,
                               const std::vector<SimulationRequest>& suite) {
  if (results.empty()) throw EmptySuite();
  std::map<std::string, const SimulationRequest*, std::less<>> by_id;
  for (const auto& r : suite) by_id.emplace(r.id, &r);

  ScoreReport rep;
  rep.scheme = scheme.name;
  rep.n_max = scheme.n_max;
  std::vector<CostSummary> costs;
  for (const auto& r : results) {
    auto it = by_id.find(r.request_id);
    if (it == by_id.end()) throw EvaluationError("no expected result for task " + r.request_id);
    const ExpectedResult& expected = it->second->expected;

    TaskScore ts;
    ts.request_id = r.request_id;
    ts.complexity = r.complexity;
    ts.terminal_status = r.terminal_status;
    ts.attempts = r.attempts.size();
    std::vector<ExecutionOutcome> outcomes;
    for (const auto& a : r.attempts) outcomes.push_back(a.outcome);
    ts.slots = slot_scores(outcomes, expected, scheme.n_max);
    for (int s : ts.slots) ts.points += s;
    ts.first_points = ts.slots.front() * scheme.n_max;
    ts.final_points = ts.slots.back() * scheme.n_max;
    ts.cost = r.cost;
    ts.wall_time = r.wall_time;
    ts.failure_reason = r.failure_reason;
    rep.tasks.push_back(std::move(ts));
  }
  std::sort(rep.tasks.begin(), rep.tasks.end(),
            [](const TaskScore& a, const TaskScore& b) { return a.request_id < b.request_id; });

  std::vector<int> all, complex, standard, first, final;
  for (const auto& t : rep.tasks) {
    all.push_back(t.points);
    (t.complexity == Complexity::complex ? complex : standard).push_back(t.points);
    first.push_back(t.first_points);
    final.push_back(t.final_points);
    CostSummary c = t.cost;
    c.wall_time = t.wall_time;
    costs.push_back(c);
  }
  rep.success_rate_all = success_rate(all, scheme.n_max);
  if (!complex.empty()) rep.success_rate_complex = success_rate(complex, scheme.n_max);
  if (!standard.empty()) rep.success_rate_standard = success_rate(standard, scheme.n_max);
  rep.first_attempt_rate = success_rate(first, scheme.n_max);
  rep.final_attempt_rate = success_rate(final, scheme.n_max);
  rep.average_cost = average_cost(scheme.name, costs);
  return rep;
}

namespace {

TaskResult failed_task(const SimulationRequest& request, const std::string& reason) {
  TaskResult r;
  r.request_id = request.id;
  r.complexity = request.complexity;
  AttemptRecord a;
  a.outcome = ExecutionOutcome::failure(ErrorKind::unspecified, reason);
  r.attempts.push_back(std::move(a));
  r.terminal_status = TerminalStatus::exhausted;
  r.failure_reason = reason;
  return r;
}

}  // namespace

BenchmarkRun run_benchmark(const std::vector<SimulationRequest>& suite, const SchemeConfig& scheme,
                           const TaskContext& ctx, std::size_t workers) {
  if (suite.empty()) throw EmptySuite();
  validate(scheme);
  BenchmarkRun run;
  run.scheme = scheme;
  run.suite = suite;
  run.results.resize(suite.size());

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < suite.size(); i = next++) {
      try {
        run.results[i] = run_task(suite[i], scheme, ctx);
      } catch (const std::exception& e) {
        run.results[i] = failed_task(suite[i], e.what());
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, suite.size());
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  std::sort(run.results.begin(), run.results.end(),
            [](const TaskResult& a, const TaskResult& b) { return a.request_id < b.request_id; });
  std::sort(run.suite.begin(), run.suite.end(),
            [](const SimulationRequest& a, const SimulationRequest& b) { return a.id < b.id; });
  run.report = build_score_report(scheme, run.results, run.suite);
  return run;
}

std::vector<SimulationRequest> parse_suite(std::string_view jsonl) {
  std::vector<SimulationRequest> out;
  std::size_t line_no = 0;
  for (auto line : text::lines(jsonl)) {
    ++line_no;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    try {
      const json j = json::parse(t);
      SimulationRequest r;
      r.id = j.at("id").get<std::string>();
      r.text = j.at("request").get<std::string>();
      r.complexity = complexity_from_string(j.value("complexity", std::string("standard")));
      r.expected.canonical = j.at("expected").get<std::string>();
      for (const auto& o : j.value("required_options", json::array())) r.expected.required_options.insert(o.get<std::string>());
      if (r.id.empty()) throw SuiteParseError(line_no, "empty id");
      if (text::trim(r.text).empty()) throw SuiteParseError(line_no, "empty request text");
      if (r.expected.canonical.empty()) throw SuiteParseError(line_no, "empty expected result");
      for (const auto& prev : out)
        if (prev.id == r.id) throw SuiteParseError(line_no, "duplicate task id " + r.id);
      out.push_back(std::move(r));
    } catch (const SuiteParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw SuiteParseError(line_no, e.what());
    }
  }
  if (out.empty()) throw EmptySuite();
  return out;
}

// ---------------------------------------------------------------------------
// Traces

namespace {

json outcome_to_json(const ExecutionOutcome& o) {
  json j{{"status", o.status == ExecutionStatus::success ? "success" : "error"},
         {"result", o.result_canonical},
         {"irrelevant_options", o.irrelevant_options},
         {"error_message", o.error_message},
         {"error_kind", std::string(to_string(o.error_kind))}};
  j["error_line"] = o.error_line ? json(*o.error_line) : json(nullptr);
  return j;
}

ExecutionOutcome outcome_from_json(const json& j) {
  ExecutionOutcome o;
  const auto status = j.at("status").get<std::string>();
  if (status != "success" && status != "error") throw std::invalid_argument("bad outcome status " + status);
  o.status = status == "success" ? ExecutionStatus::success : ExecutionStatus::error;
  o.result_canonical = j.at("result").get<std::string>();
  o.irrelevant_options = j.at("irrelevant_options").get<std::set<std::string>>();
  o.error_message = j.at("error_message").get<std::string>();
  o.error_kind = error_kind_from_string(j.at("error_kind").get<std::string>());
  if (!j.at("error_line").is_null()) o.error_line = j.at("error_line").get<int>();
  return o;
}

json plan_to_json(const QueryPlan& p) {
  json arr = json::array();
  for (const auto& q : p.subqueries) {
    json s{{"id", q.id}, {"kind", std::string(to_string(q.kind))}, {"keyword", q.keyword}};
    if (q.value) s["value"] = *q.value;
    arr.push_back(std::move(s));
  }
  return arr;
}

QueryPlan plan_from_json(const json& arr, const std::string& request_id) {
  QueryPlan p;
  p.request_id = request_id;
  for (const auto& s : arr) {
    SubQuery q;
    q.id = s.at("id").get<std::size_t>();
    q.kind = subquery_kind_from_string(s.at("kind").get<std::string>());
    q.keyword = s.at("keyword").get<std::string>();
    if (s.contains("value")) q.value = s.at("value").get<std::string>();
    p.subqueries.push_back(std::move(q));
  }
  return p;
}

json scheme_to_json(const SchemeConfig& s) {
  return json::parse(schemes_to_json({s})).at(0);
}

}  // namespace

std::string write_trace(const std::vector<BenchmarkRun>& runs) {
  std::string out;
  auto emit = [&out](const json& j) {
    out += j.dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  };
  for (const auto& run : runs) {
    emit({{"type", "run"}, {"scheme", scheme_to_json(run.scheme)}});
    std::map<std::string, const SimulationRequest*, std::less<>> by_id;
    for (const auto& r : run.suite) by_id.emplace(r.id, &r);
    for (const auto& t : run.results) {
      json task{{"type", "task"},
                {"id", t.request_id},
                {"complexity", std::string(to_string(t.complexity))},
                {"terminal_status", std::string(to_string(t.terminal_status))},
                {"wall_time", t.wall_time},
                {"cost",
                 {{"input_tokens", t.cost.input_tokens},
                  {"output_tokens", t.cost.output_tokens},
                  {"wall_time", t.cost.wall_time},
                  {"usd", t.cost.usd}}},
                {"failure_reason", t.failure_reason}};
      if (auto it = by_id.find(t.request_id); it != by_id.end()) {
        task["request"] = it->second->text;
        task["expected"] = it->second->expected.canonical;
        task["required_options"] = it->second->expected.required_options;
      }
      emit(task);
      for (const auto& a : t.attempts) {
        emit({{"type", "attempt"},
              {"id", t.request_id},
              {"index", a.index},
              {"code", a.code},
              {"outcome", outcome_to_json(a.outcome)},
              {"plan", plan_to_json(a.plan_used)},
              {"retrieval_queries", a.retrieval_queries},
              {"context_chunk_ids", a.context_chunk_ids},
              {"prompt_digest", a.prompt_digest},
              {"input_tokens", a.input_tokens},
              {"output_tokens", a.output_tokens}});
      }
    }
  }
  return out;
}

std::vector<BenchmarkRun> read_trace(std::string_view jsonl) {
  std::vector<BenchmarkRun> runs;
  std::size_t line_no = 0;
  for (auto line : text::lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "run") {
        BenchmarkRun run;
        run.scheme = parse_schemes(json::array({j.at("scheme")}).dump()).at(0);
        runs.push_back(std::move(run));
        continue;
      }
      if (runs.empty()) throw std::invalid_argument("record before any run record");
      auto& run = runs.back();
      if (type == "task") {
        TaskResult t;
        t.request_id = j.at("id").get<std::string>();
        t.complexity = complexity_from_string(j.at("complexity").get<std::string>());
        t.terminal_status = terminal_status_from_string(j.at("terminal_status").get<std::string>());
        t.wall_time = j.at("wall_time").get<double>();
        const auto& c = j.at("cost");
        t.cost.input_tokens = c.at("input_tokens").get<std::int64_t>();
        t.cost.output_tokens = c.at("output_tokens").get<std::int64_t>();
        t.cost.wall_time = c.at("wall_time").get<double>();
        t.cost.usd = c.at("usd").get<double>();
        t.failure_reason = j.at("failure_reason").get<std::string>();
        if (j.contains("expected")) {
          SimulationRequest r;
          r.id = t.request_id;
          r.text = j.value("request", std::string());
          r.complexity = t.complexity;
          r.expected.canonical = j.at("expected").get<std::string>();
          r.expected.required_options = j.value("required_options", std::set<std::string>{});
          run.suite.push_back(std::move(r));
        }
        run.results.push_back(std::move(t));
      } else if (type == "attempt") {
        if (run.results.empty() || run.results.back().request_id != j.at("id").get<std::string>())
          throw std::invalid_argument("attempt record does not follow its task record");
        AttemptRecord a;
        a.index = j.at("index").get<int>();
        a.code = j.at("code").get<std::string>();
        a.outcome = outcome_from_json(j.at("outcome"));
        a.plan_used = plan_from_json(j.at("plan"), run.results.back().request_id);
        a.retrieval_queries = j.at("retrieval_queries").get<std::vector<std::string>>();
        a.context_chunk_ids = j.at("context_chunk_ids").get<std::vector<std::string>>();
        a.prompt_digest = j.at("prompt_digest").get<std::string>();
        a.input_tokens = j.at("input_tokens").get<std::int64_t>();
        a.output_tokens = j.at("output_tokens").get<std::int64_t>();
        run.results.back().attempts.push_back(std::move(a));
      } else {
        throw std::invalid_argument("unknown record type " + type);
      }
    } catch (const std::exception& e) {
      throw TraceParseError(line_no, e.what());
    }
  }
  for (const auto& run : runs)
    if (run.results.empty()) throw TraceParseError(line_no, "run " + run.scheme.name + " has no tasks");
  return runs;
}

std::vector<ScoreReport> rescore(const std::vector<BenchmarkRun>& runs) {
  std::vector<ScoreReport> out;
  out.reserve(runs.size());
  for (const auto& run : runs) out.push_back(build_score_report(run.scheme, run.results, run.suite));
  return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string pct(const std::optional<double>& v) { return v ? pct(*v) : std::string("n/a"); }

}  // namespace

std::string format_reports(const std::vector<ScoreReport>& reports) {
  std::string out = "# summary\n";
  out += "scheme\tn_max\ttasks\tpoints\tmax_points\tall\tcomplex\tstandard\tfirst_attempt\tfinal_attempt\n";
  for (const auto& r : reports) {
    long long points = 0;
    for (const auto& t : r.tasks) points += t.points;
    const long long max_points = static_cast<long long>(r.tasks.size()) * 100LL * r.n_max;
    out += r.scheme + '\t' + std::to_string(r.n_max) + '\t' + std::to_string(r.tasks.size()) + '\t' +
           std::to_string(points) + '\t' + std::to_string(max_points) + '\t' + pct(r.success_rate_all) + '\t' +
           pct(r.success_rate_complex) + '\t' + pct(r.success_rate_standard) + '\t' + pct(r.first_attempt_rate) +
           '\t' + pct(r.final_attempt_rate) + '\n';
  }
  out += "\n# tasks\n";
  out += "scheme\tid\tcomplexity\tstatus\tattempts\tslots\tpoints\n";
  for (const auto& r : reports) {
    for (const auto& t : r.tasks) {
      std::string slots;
      for (std::size_t i = 0; i < t.slots.size(); ++i) slots += (i ? "," : "") + std::to_string(t.slots[i]);
      out += r.scheme + '\t' + t.request_id + '\t' + std::string(to_string(t.complexity)) + '\t' +
             std::string(to_string(t.terminal_status)) + '\t' + std::to_string(t.attempts) + '\t' + slots + '\t' +
             std::to_string(t.points) + '\n';
    }
  }
  std::vector<CostRow> rows;
  for (const auto& r : reports) {
    out += "\n== " + r.scheme + " ==\n";
    out += "Success rate, all tasks:      " + pct(r.success_rate_all) + "%\n";
    out += "Success rate, complex tasks:  " + pct(r.success_rate_complex) + (r.success_rate_complex ? "%\n" : "\n");
    out += "Success rate, standard tasks: " + pct(r.success_rate_standard) + (r.success_rate_standard ? "%\n" : "\n");
    out += "First attempt success rate:   " + pct(r.first_attempt_rate) + "%\n";
    out += "Final attempt success rate:   " + pct(r.final_attempt_rate) + "%\n";
    for (const auto& t : r.tasks)
      if (!t.failure_reason.empty()) out += "Task " + t.request_id + " failed: " + t.failure_reason + "\n";
    rows.push_back(r.average_cost);
  }
  out += "\n# cost (per-task average)\n";
  out += format_cost_table(rows);
  return out;
}

}  // namespace simagent
