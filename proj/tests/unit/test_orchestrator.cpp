#include <doctest.h>

#include "simagent/evaluation.hpp"
#include "support.hpp"

using namespace simagent;
using namespace simagent::testing;

namespace {

SchemeConfig scheme(const char* name, int n_max = 3) { return find_scheme(builtin_schemes(n_max), name); }

ScriptedProvider fixture_planner() {
  return ScriptedProvider(ScriptedProvider::parse_rules(fixture("minigrid/scripts/planner.json")), "planner");
}
ScriptedProvider fixture_coder() {
  return ScriptedProvider(ScriptedProvider::parse_rules(fixture("minigrid/scripts/coder.json")), "coder");
}

SimulationRequest request(const std::string& id) {
  for (auto& r : parse_suite(fixture("minigrid/suite.jsonl")))
    if (r.id == id) return r;
  throw std::logic_error("no fixture task " + id);
}

const std::string kGaussSeidel = "t01_pf_gauss_seidel";
const std::string kBadCode = "load_case(case9)\nset opt.pf.algorithm = GS\nrun_pf(case9)";

}  // namespace

TEST_CASE("happy path: one attempt, success") {
  Stack stack;
  auto planner = fixture_planner();
  auto coder = fixture_coder();
  const auto r = run_task(request("t02_opf_ipopt"), scheme("GPT4o-Full"), stack.context(planner, coder));
  REQUIRE(r.attempts.size() == 1);
  CHECK(r.terminal_status == TerminalStatus::success);
  CHECK(r.attempts[0].index == 1);
  CHECK(r.attempts[0].outcome.result_canonical == "load_case(case30){}\nrun_opf(case30){opt.opf.solver=IPOPT}");
  CHECK(r.attempts[0].plan_used.subqueries.size() == 3);
  CHECK(r.attempts[0].retrieval_queries.size() == 3);
  CHECK(!r.attempts[0].context_chunk_ids.empty());
  CHECK(r.attempts[0].prompt_digest == prompt_digest(coder.calls()[0]));
  CHECK(r.failure_reason.empty());
  CHECK(r.cost.input_tokens == r.attempts[0].input_tokens);
  CHECK(r.cost.output_tokens == r.attempts[0].output_tokens);
  CHECK(r.cost.usd == doctest::Approx((r.cost.input_tokens * 5.0 + r.cost.output_tokens * 15.0) / 1e6));
}

TEST_CASE("correction: UnknownOption on attempt 1, fixed on attempt 2 with the full report in the prompt") {
  Stack stack;
  auto planner = fixture_planner();
  auto coder = fixture_coder();
  const auto req = request(kGaussSeidel);
  const auto r = run_task(req, scheme("GPT4o-Full"), stack.context(planner, coder));
  REQUIRE(r.attempts.size() == 2);
  CHECK(r.terminal_status == TerminalStatus::success);
  CHECK(r.attempts[0].code == kBadCode);
  CHECK(r.attempts[0].outcome.error_kind == ErrorKind::unknown_option);
  CHECK(r.attempts[1].outcome.result_canonical == req.expected.canonical);

  // Independent rebuild of what the second prompt must carry.
  const ChatHistory history = {{Role::user, req.text}, {Role::assistant, fenced(kBadCode)}};
  const auto report = build_error_report(kBadCode, r.attempts[0].outcome, stack.hints, history);
  const auto calls = coder.calls();
  const auto& prompt = calls[1];
  REQUIRE(prompt.size() == 4);
  CHECK(prompt[1] == history[0]);
  CHECK(prompt[2] == history[1]);
  CHECK(prompt[3].content == render_error_report(report));
  for (auto h : kErrorReportHeaders) CHECK(prompt[3].content.find(h) != std::string::npos);
  CHECK(prompt[3].content.find(kBadCode) != std::string::npos);
  CHECK(prompt[3].content.find("UnknownOption opt.pf.algorithm (line 2)") != std::string::npos);
  CHECK(r.attempts[1].prompt_digest == prompt_digest(prompt));

  // The retry was planned from the report by the error planner.
  REQUIRE(planner.call_count() == 2);
  CHECK(planner.calls()[1][1].content.find(render_error_report(report)) != std::string::npos);
  CHECK(r.attempts[1].plan_used.subqueries[0].kind == SubQueryKind::error);

  CHECK(score_task(r.attempts, req.expected, 3) == 200);
  CHECK(r.cost.input_tokens == r.attempts[0].input_tokens + r.attempts[1].input_tokens);
}

TEST_CASE("attempt bound with an always-erroring coder") {
  Stack stack;
  for (int n_max = 1; n_max <= 5; ++n_max) {
    auto planner = scripted({{".", "FUNCTION: run_pf"}});
    auto coder = scripted({{".", fenced("no_such_fn(1)")}});
    const auto r = run_task({"x", "run something", Complexity::standard, {}}, scheme("GPT4o-Full", n_max),
                            stack.context(planner, coder));
    CHECK(r.attempts.size() == static_cast<std::size_t>(n_max));
    CHECK(r.terminal_status == TerminalStatus::exhausted);
    for (int i = 0; i < n_max; ++i) CHECK(r.attempts[i].index == i + 1);
    CHECK(coder.call_count() == static_cast<std::size_t>(n_max));
  }
}

TEST_CASE("no retry after an executing but wrong script, nor without feedback") {
  Stack stack;
  auto planner = scripted({{".", "FUNCTION: run_pf"}});
  auto coder = scripted({{".", fenced("load_case(case118)\nrun_pf(case118)")}});
  const auto wrong = run_task(request(kGaussSeidel), scheme("GPT4o-Full", 5), stack.context(planner, coder));
  CHECK(wrong.attempts.size() == 1);
  CHECK(wrong.terminal_status == TerminalStatus::success);
  CHECK(score_task(wrong.attempts, request(kGaussSeidel).expected, 5) == 0);

  auto erring = scripted({{".", fenced("oops(")}});
  auto no_feedback = scheme("GPT4o-Full");
  no_feedback.feedback = false;
  const auto r = run_task(request(kGaussSeidel), no_feedback, stack.context(planner, erring));
  CHECK(r.attempts.size() == 1);
  CHECK(r.terminal_status == TerminalStatus::noretry_failure);
}

TEST_CASE("select_retrieval call counts per scheme") {
  Stack stack;
  CountingEmbedder counter(stack.embedder);
  auto planner = fixture_planner();
  auto coder = fixture_coder();
  const auto ctx = stack.context(planner, coder, &counter);
  const auto req = request("t04_ridge_model");
  CostLedger ledger;

  const auto full = select_retrieval(scheme("GPT4o-Full"), req, ctx, ledger);
  CHECK(counter.count() == full.plan.subqueries.size());
  CHECK(full.plan.subqueries.size() == 5);
  CHECK(planner.call_count() == 1);

  counter.reset();
  const auto sr = select_retrieval(scheme("GPT4o-SR"), req, ctx, ledger);
  CHECK(counter.count() == 1);
  CHECK(counter.texts()[0] == req.text);
  CHECK(sr.queries == std::vector<std::string>{req.text});
  CHECK(planner.call_count() == 1);

  counter.reset();
  const auto sole = select_retrieval(scheme("GPT4o-Sole"), req, ctx, ledger);
  CHECK(counter.count() == 0);
  CHECK(sole.result.empty());

  counter.reset();
  const auto np = select_retrieval(scheme("GPT4o-NP"), req, ctx, ledger);
  REQUIRE(!np.result.merged.empty());
  for (const auto& c : np.result.merged) CHECK(c.source == ChunkSource::manual);
  CHECK(std::any_of(full.result.merged.begin(), full.result.merged.end(),
                    [](const ContextChunk& c) { return c.source == ChunkSource::option_doc; }));
}

TEST_CASE("an empty plan falls back to the whole request") {
  Stack stack;
  CountingEmbedder counter(stack.embedder);
  auto planner = scripted({{".", "I have no idea."}});
  auto coder = fixture_coder();
  CostLedger ledger;
  const auto req = request(kGaussSeidel);
  const auto sel = select_retrieval(scheme("GPT4o-Full"), req, stack.context(planner, coder, &counter), ledger);
  CHECK(sel.plan.subqueries.empty());
  CHECK(counter.texts() == std::vector<std::string>{req.text});
}

TEST_CASE("error retrieval without error planning uses the rendered report") {
  Stack stack;
  CountingEmbedder counter(stack.embedder);
  auto planner = fixture_planner();
  auto coder = fixture_coder();
  LoopOptions options;
  options.plan_error_queries = false;
  const auto r = run_task(request(kGaussSeidel), scheme("GPT4o-Full"), stack.context(planner, coder, &counter, options));
  REQUIRE(r.attempts.size() == 2);
  CHECK(planner.call_count() == 1);
  REQUIRE(r.attempts[1].retrieval_queries.size() == 1);
  CHECK(r.attempts[1].retrieval_queries[0] == coder.calls()[1].back().content);
}

TEST_CASE("poor error reporting exhausts the correction scenario") {
  Stack stack;
  auto planner = fixture_planner();
  auto coder = fixture_coder();
  const auto r = run_task(request(kGaussSeidel), scheme("GPT4o-RSRNW"), stack.context(planner, coder));
  CHECK(r.attempts.size() == 3);
  CHECK(r.terminal_status == TerminalStatus::exhausted);
  for (std::size_t i = 1; i < coder.call_count(); ++i) {
    const auto report_text = coder.calls()[i].back().content;
    CHECK(report_text.find("(line") == std::string::npos);
    CHECK(report_text.find(kGenericExecutionError) != std::string::npos);
  }
}

TEST_CASE("provider failure ends the task as exhausted with the reason kept") {
  Stack stack;
  auto planner = fixture_planner();
  auto silent = scripted({});
  const auto r = run_task(request(kGaussSeidel), scheme("GPT4o-Full"), stack.context(planner, silent));
  REQUIRE(r.attempts.size() == 1);
  CHECK(r.terminal_status == TerminalStatus::exhausted);
  CHECK(r.attempts[0].outcome.error_kind == ErrorKind::provider_error);
  CHECK(!r.failure_reason.empty());
  CHECK(r.attempts[0].input_tokens > 0);  // the planner call still counts
}

TEST_CASE("a reply without code becomes a repairable error") {
  Stack stack;
  auto planner = scripted({{".", "FUNCTION: run_pf"}});
  auto coder = scripted({{"NoCodeFound", fenced("load_case(case9)\nset opt.pf.alg = GS\nrun_pf(case9)")},
                         {".", "Sure, I can help with that."}});
  const auto r = run_task(request(kGaussSeidel), scheme("GPT4o-Full"), stack.context(planner, coder));
  REQUIRE(r.attempts.size() == 2);
  CHECK(r.attempts[0].outcome.error_kind == ErrorKind::no_code_found);
  CHECK(r.attempts[0].code == "Sure, I can help with that.");
  CHECK(r.attempts[0].prompt_digest == prompt_digest(coder.calls()[0]));
  CHECK(r.terminal_status == TerminalStatus::success);
  CHECK(coder.calls()[1].back().content.find(stack.hints.by_kind.at("no_code_found")) != std::string::npos);
}

TEST_CASE("history cap bounds the retry prompt") {
  Stack stack;
  auto planner = scripted({{".", "FUNCTION: run_pf"}});
  auto coder = scripted({{".", fenced("bad(")}});
  LoopOptions options;
  options.history_cap = 2;
  const auto r = run_task(request(kGaussSeidel), scheme("GPT4o-Full", 4), stack.context(planner, coder, nullptr, options));
  REQUIRE(r.attempts.size() == 4);
  CHECK(coder.calls()[0].size() == 2);
  for (std::size_t i = 1; i < 4; ++i) CHECK(coder.calls()[i].size() == 4);
}

TEST_CASE("schemes without retrieval run with no index at all") {
  Stack stack;
  auto planner = scripted({});
  auto coder = fixture_coder();
  const TaskContext ctx{stack.env, nullptr, nullptr, planner, coder, stack.templates, stack.hints, {}, {}};
  const auto r = run_task(request("t02_opf_ipopt"), scheme("GPT4o-Sole"), ctx);
  CHECK(r.terminal_status == TerminalStatus::success);
  CHECK(planner.call_count() == 0);
  CHECK(r.attempts[0].context_chunk_ids.empty());
}

TEST_CASE("terminal status names round trip") {
  for (auto s : {TerminalStatus::success, TerminalStatus::exhausted, TerminalStatus::noretry_failure})
    CHECK(terminal_status_from_string(to_string(s)) == s);
  CHECK_THROWS(terminal_status_from_string("done"));
}
