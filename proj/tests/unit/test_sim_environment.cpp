#include <doctest.h>

#include <chrono>
#include <random>

#include "simagent/sim_environment.hpp"
#include "support.hpp"

using namespace simagent;
using namespace simagent::testing;

namespace {

constexpr auto kWell = ErrorReportingQuality::well_developed;
constexpr auto kPoor = ErrorReportingQuality::poor;

EnvironmentSpec small_spec() {
  return load_environment_spec(
      "function run_pf 1 1\n"
      "function render_plot 0 1\n"
      "function load_case 1 1\n"
      "option opt.pf.tol | 1e-8 | run_pf | positive number\n"
      "option opt.pf.alg | NR | run_pf | NR, GS\n"
      "option opt.plot.style | default | render_plot | any\n"
      "option opt.verbose | 0 | run_pf, render_plot | 0..3\n");
}

}  // namespace

TEST_CASE("execute examples") {
  const auto spec = small_spec();
  const auto ok = execute(spec, "set opt.pf.tol = 1e-8\nrun_pf(case39)", kWell);
  CHECK(ok.status == ExecutionStatus::success);
  CHECK(ok.result_canonical == "run_pf(case39){opt.pf.tol=1e-8}");
  CHECK(ok.irrelevant_options.empty());
  CHECK(ok.error_message.empty());

  const auto stray = execute(spec, "set opt.pf.tol = 1e-8\nset opt.plot.style = dark\nrun_pf(case39)", kWell);
  CHECK(stray.status == ExecutionStatus::success);
  CHECK(stray.irrelevant_options == std::set<std::string>{"opt.plot.style"});

  const auto unknown = execute(spec, "run_flow(x)", kWell);
  CHECK(unknown.status == ExecutionStatus::error);
  CHECK(unknown.error_message == "UnknownFunction run_flow");
  CHECK(unknown.error_line == 1);
  CHECK(unknown.error_kind == ErrorKind::unknown_function);
  CHECK(unknown.result_canonical.empty());

  const auto masked = execute(spec, "run_flow(x)", kPoor);
  CHECK(masked.status == ExecutionStatus::error);
  CHECK(masked.error_message == kGenericExecutionError);
  CHECK(!masked.error_line);
}

TEST_CASE("execute error taxonomy") {
  const auto spec = small_spec();
  const auto arity = execute(spec, "# comment\n\nrun_pf(a, b)", kWell);
  CHECK(arity.error_kind == ErrorKind::arity_mismatch);
  CHECK(arity.error_line == 3);
  CHECK(arity.error_message.starts_with("ArityMismatch run_pf"));

  const auto opt = execute(spec, "load_case(c)\nset opt.pf.tolerance = 1", kWell);
  CHECK(opt.error_kind == ErrorKind::unknown_option);
  CHECK(opt.error_message == "UnknownOption opt.pf.tolerance");
  CHECK(opt.error_line == 2);

  for (const char* bad : {"run_pf(case9", "set opt.pf.tol 3", "set opt.pf.tol =", "run_pf((x))", "run_pf(a,)", "9x()"}) {
    const auto o = execute(spec, bad, kWell);
    CHECK_MESSAGE(o.error_kind == ErrorKind::syntax_error, bad);
    CHECK(o.error_line == 1);
  }
}

TEST_CASE("canonical listing: call order kept, options sorted, values latest") {
  const auto spec = small_spec();
  const auto o = execute(spec,
                         "set opt.verbose = 2\nset opt.pf.tol = 1e-6\nrender_plot()\nset opt.pf.tol = 1e-9;\n"
                         "run_pf(case9)\nload_case(case9)",
                         kWell);
  REQUIRE(o.status == ExecutionStatus::success);
  CHECK(o.result_canonical == "render_plot(){opt.verbose=2}\nrun_pf(case9){opt.pf.tol=1e-9,opt.verbose=2}\nload_case(case9){}");
}

TEST_CASE("detect_error") {
  CHECK_FALSE(detect_error(ExecutionOutcome{}));
  CHECK(detect_error(ExecutionOutcome::failure(ErrorKind::syntax_error, "x", 1)));
  CHECK(detect_error(ExecutionOutcome::no_code_found()));
}

TEST_CASE("load_environment_spec") {
  const auto fixture_spec = load_environment_spec(
      "function a 0 0\nfunction b 1 2\nfunction c 1 1\n"
      "option o1 | 1 | a | x\noption o2 | 2 | b | x\noption o3 | 3 | a, c | x\noption o4 | 4 | c | x\n");
  CHECK(fixture_spec.functions.size() == 3);
  CHECK(fixture_spec.options.size() == 4);
  CHECK(fixture_spec.options.at("o3").dependencies == std::set<std::string>{"a", "c"});

  try {
    load_environment_spec("function a 0 0\noption o | 1 | a, ghost | x\n");
    FAIL("expected DanglingDependency");
  } catch (const DanglingDependency& e) {
    CHECK(e.option() == "o");
    CHECK(e.function() == "ghost");
  }

  const auto empty = load_environment_spec("");
  CHECK(empty.functions.empty());
  CHECK(execute(empty, "anything(x)", kWell).error_kind == ErrorKind::unknown_function);

  try {
    load_environment_spec("# header\nfunction a 0 0\nfunction a 1 1\n");
    FAIL("expected SpecParseError");
  } catch (const SpecParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(load_environment_spec("function a 2 1\n"), SpecParseError);
  CHECK_THROWS_AS(load_environment_spec("function a x 1\n"), SpecParseError);
  CHECK_THROWS_AS(load_environment_spec("option o | 1 | | x\n"), SpecParseError);
  CHECK_THROWS_AS(load_environment_spec("what is this\n"), SpecParseError);

  const auto minigrid = load_environment_spec(fixture("minigrid/env_spec.txt"));
  CHECK(minigrid.functions.size() == 10);
  CHECK(minigrid.options.size() == 18);
}

TEST_CASE("random scripts: determinism, masking, consumption soundness, abort on first error") {
  const auto spec = load_environment_spec(fixture("minigrid/env_spec.txt"));
  std::vector<std::string> fns;
  for (const auto& [n, _] : spec.functions) fns.push_back(n);
  std::vector<std::string> opts;
  for (const auto& [n, _] : spec.options) opts.push_back(n);
  fns.push_back("ghost_fn");
  opts.push_back("opt.ghost");

  std::mt19937 rng(99);
  auto pick = [&](const std::vector<std::string>& v) { return v[rng() % v.size()]; };
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<std::string> lines;
    for (int n = static_cast<int>(rng() % 8); n > 0; --n) {
      switch (rng() % 5) {
        case 0:
        case 1:
          lines.push_back("set " + pick(opts) + " = v" + std::to_string(rng() % 3));
          break;
        case 2:
        case 3: {
          std::string args;
          for (int a = static_cast<int>(rng() % 4); a > 0; --a) args += (args.empty() ? "" : ", ") + std::string("a");
          lines.push_back(pick(fns) + "(" + args + ")");
          break;
        }
        default:
          lines.push_back(rng() % 2 ? "# note" : "broken line");
      }
    }
    const std::string code = text::join(lines, "\n");
    const auto well = execute(spec, code, kWell);
    const auto poor = execute(spec, code, kPoor);
    CHECK(execute(spec, code, kWell) == well);
    CHECK(well.status == poor.status);
    if (well.status == ExecutionStatus::success) {
      CHECK(well == poor);
      CHECK(well.error_message.empty());
      // Every consumed option was set earlier, and never reported irrelevant.
      for (auto line : text::lines(well.result_canonical)) {
        const auto open = line.find('{');
        const auto body = line.substr(open + 1, line.size() - open - 2);
        if (body.empty()) continue;
        for (auto kv : text::split(body, ',')) {
          const std::string name(kv.substr(0, kv.find('=')));
          CHECK(code.find("set " + name + " =") != std::string::npos);
          CHECK(!well.irrelevant_options.contains(name));
        }
      }
    } else {
      CHECK(well.result_canonical.empty());
      CHECK(well.irrelevant_options.empty());
      CHECK(!well.error_message.empty());
      REQUIRE(well.error_line);
      CHECK(*well.error_line >= 1);
      CHECK(*well.error_line <= static_cast<int>(lines.size()));
      CHECK(poor.error_message == kGenericExecutionError);
      CHECK(!poor.error_line);
      // The prefix up to the failing line fails identically; the prefix before it runs clean.
      const auto cut = static_cast<std::size_t>(*well.error_line);
      std::vector<std::string> before(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(cut - 1));
      std::vector<std::string> upto(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(cut));
      CHECK(execute(spec, text::join(before, "\n"), kWell).status == ExecutionStatus::success);
      CHECK(execute(spec, text::join(upto, "\n"), kWell) == well);
    }
  }
}

TEST_CASE("subprocess adapter") {
  using namespace std::chrono_literals;
  const SubprocessEnvironment sh({"sh"}, 2000ms);
  const auto ok = sh.run("echo hello\necho world", kWell);
  CHECK(ok.status == ExecutionStatus::success);
  CHECK(ok.result_canonical == "hello\nworld");

  const auto flagged = sh.run("echo before\necho 'EXEC_ERROR: bad option foo'", kWell);
  CHECK(flagged.status == ExecutionStatus::error);
  CHECK(flagged.error_message == "bad option foo");
  CHECK(flagged.error_kind == ErrorKind::tool_error);
  CHECK(sh.run("echo 'EXEC_ERROR: bad option foo'", kPoor).error_message == kGenericExecutionError);

  const auto status = sh.run("exit 3", kWell);
  CHECK(status.status == ExecutionStatus::error);
  CHECK(status.error_message.find("3") != std::string::npos);

  const SubprocessEnvironment slow({"sh"}, 200ms);
  const auto t0 = std::chrono::steady_clock::now();
  const auto timed_out = slow.run("sleep 5", kWell);
  CHECK(std::chrono::steady_clock::now() - t0 < 3s);
  CHECK(timed_out.status == ExecutionStatus::error);
  CHECK(timed_out.error_message.find("wall-clock") != std::string::npos);

  CHECK_THROWS(SubprocessEnvironment({}, 100ms));
  CHECK_THROWS(SubprocessEnvironment({"sh"}, 0ms));
  const auto missing = SubprocessEnvironment({"/nonexistent/tool"}, 500ms).run("x", kWell);
  CHECK(missing.status == ExecutionStatus::error);
}
