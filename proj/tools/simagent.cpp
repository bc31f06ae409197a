// simagent: build knowledge bases, run single requests, benchmark schemes and
// rescore saved traces.
//
// Exit codes: 0 success, 1 task-level failure, 2 configuration or usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "simagent/app_config.hpp"
#include "simagent/evaluation.hpp"
#include "simagent/text.hpp"

namespace fs = std::filesystem;
using namespace simagent;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTaskFailure = 1;
constexpr int kExitConfig = 2;

struct Common {
  std::string config;
  std::string index;
  std::string env_spec;
  std::optional<int> n_max;
};

void print_header(std::string_view command, const AppConfig& cfg, const Runtime& rt,
                  const std::vector<std::string>& schemes, std::size_t workers) {
  std::cout << "simagent " << command << "\n"
            << "  config:       " << cfg.source.string() << "\n"
            << "  planner:      " << rt.planner->describe() << "\n"
            << "  coder:        " << rt.coder->describe() << "\n"
            << "  embedder:     " << rt.embedder->family() << "\n"
            << "  environment:  " << rt.environment->describe() << "\n"
            << "  index:        " << rt.index_origin << " (" << rt.index->size() << " chunks)\n"
            << "  schemes:      " << text::join(schemes, ", ") << "\n"
            << "  top_k:        " << rt.loop.top_k << "\n"
            << "  history_cap:  " << rt.loop.history_cap << "\n"
            << "  error_plan:   " << (rt.loop.plan_error_queries ? "on" : "off") << "\n"
            << "  pricing:      " << rt.pricing.usd_per_million_input << " / " << rt.pricing.usd_per_million_output
            << " USD per million input/output tokens\n"
            << "  workers:      " << workers << "\n"
            << "  randomness:   " << (cfg.provider_kind == "scripted" ? "none (scripted provider, temperature 0)"
                                                                       : "provider-side only, temperature 0")
            << "\n";
}

AppConfig load_with_overrides(const Common& common) {
  AppConfig cfg = load_app_config(common.config);
  if (!common.index.empty()) cfg.index = common.index;
  if (!common.env_spec.empty()) cfg.env_spec = common.env_spec;
  if (common.n_max) cfg.n_max = *common.n_max;
  if (cfg.n_max && *cfg.n_max < 1) throw ConfigError("--n-max must be at least 1");
  return cfg;
}

int cmd_build_kb(const Common& common, const std::string& manual, const std::string& option_doc,
                 const std::string& out) {
  AppConfig cfg = load_app_config(common.config);
  if (!manual.empty()) cfg.manual = manual;
  if (!option_doc.empty()) cfg.option_doc = option_doc;
  const fs::path target = out.empty() ? cfg.index : fs::path(out);
  if (target.empty()) throw ConfigError("no output path: pass --out or set knowledge.index");

  HashingEmbedder hashing(cfg.embedding_dimension);
  std::unique_ptr<Embedder> live;
  CostLedger ledger;
  const Embedder* embedder = &hashing;
  if (cfg.embedder_kind == "live") {
    auto lc = LiveEmbedderConfig::from_environment();
    if (!lc) throw ConfigError("embedder.kind=live needs SIMAGENT_EMBED_URL");
    live = std::make_unique<LiveEmbedder>(*lc, &ledger);
    embedder = live.get();
  }
  const VectorIndex index = build_index(knowledge_chunks(cfg), *embedder);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  text::write_file(target, index.serialize());
  std::cout << "manual chunks:     " << index.count(ChunkSource::manual) << "\n"
            << "option_doc chunks: " << index.count(ChunkSource::option_doc) << "\n"
            << "embedder:          " << index.family() << " (dimension " << index.dimension() << ")\n"
            << "index written to   " << target.string() << "\n";
  return kExitOk;
}

int cmd_run(const Common& common, const std::string& scheme_name, std::string request_text,
            const std::string& request_file, const std::string& trace_out) {
  if (!request_file.empty()) request_text = text::read_file(request_file);
  if (text::trim(request_text).empty()) throw ConfigError("pass --request or --request-file");
  const AppConfig cfg = load_with_overrides(common);
  auto rt = make_runtime(cfg);
  const SchemeConfig& scheme = find_scheme(rt->schemes, scheme_name);
  print_header("run", cfg, *rt, {scheme.name}, 1);

  SimulationRequest request;
  request.id = "cli";
  request.text = std::string(text::trim(request_text));
  const TaskResult result = run_task(request, scheme, rt->context());

  const AttemptRecord& last = result.attempts.back();
  std::cout << "\n--- final code (attempt " << last.index << ") ---\n" << last.code << "\n";
  std::cout << "--- execution ---\n";
  if (detect_error(last.outcome)) {
    std::cout << "error: " << describe_error(last.outcome) << "\n";
  } else {
    std::cout << last.outcome.result_canonical << "\n";
    if (!last.outcome.irrelevant_options.empty()) {
      std::vector<std::string> names(last.outcome.irrelevant_options.begin(), last.outcome.irrelevant_options.end());
      std::cout << "irrelevant settings: " << text::join(names, ", ") << "\n";
    }
  }
  std::cout << "attempts: " << result.attempts.size() << " of " << scheme.n_max << "\n"
            << "status:   " << to_string(result.terminal_status) << "\n";
  if (!result.failure_reason.empty()) std::cout << "failure:  " << result.failure_reason << "\n";
  std::cout << "\n" << format_cost_table({CostRow{scheme.name, result.wall_time,
                                                 static_cast<double>(result.cost.input_tokens),
                                                 static_cast<double>(result.cost.output_tokens), result.cost.usd}},
                                         "Scheme");
  if (!trace_out.empty()) {
    BenchmarkRun run;
    run.scheme = scheme;
    run.results = {result};
    text::write_file(trace_out, write_trace({run}));
  }
  return result.terminal_status == TerminalStatus::success ? kExitOk : kExitTaskFailure;
}

int cmd_bench(const Common& common, std::vector<std::string> scheme_names, const std::string& suite_path,
              std::size_t workers, const std::string& out, std::string trace_out) {
  const AppConfig cfg = load_with_overrides(common);
  auto rt = make_runtime(cfg);
  if (scheme_names.size() == 1 && scheme_names[0] == "all") {
    scheme_names.clear();
    for (const auto& s : rt->schemes) scheme_names.push_back(s.name);
  }
  if (scheme_names.empty()) throw ConfigError("no schemes selected: pass --scheme NAME (repeatable) or --scheme all");
  std::vector<SchemeConfig> schemes;
  for (const auto& n : scheme_names) schemes.push_back(find_scheme(rt->schemes, n));
  const fs::path suite_file = suite_path.empty() ? cfg.suite : fs::path(suite_path);
  if (suite_file.empty()) throw ConfigError("no suite: pass --suite or set suite in the config");
  const auto suite = parse_suite(text::read_file(suite_file));
  if (workers == 0) throw ConfigError("--workers must be at least 1");

  print_header("bench", cfg, *rt, scheme_names, workers);
  std::cout << "  suite:        " << suite_file.string() << " (" << suite.size() << " tasks)\n";

  std::vector<BenchmarkRun> runs;
  bool any_failure = false;
  const TaskContext ctx = rt->context();
  for (const auto& scheme : schemes) {
    runs.push_back(run_benchmark(suite, scheme, ctx, workers));
    for (const auto& r : runs.back().results) any_failure |= !r.failure_reason.empty();
  }
  std::vector<ScoreReport> reports;
  for (const auto& r : runs) reports.push_back(r.report);
  const std::string report = format_reports(reports);
  std::cout << "\n" << report;

  if (!out.empty()) {
    text::write_file(out, report);
    if (trace_out.empty()) trace_out = out + ".trace.jsonl";
  }
  if (!trace_out.empty()) {
    text::write_file(trace_out, write_trace(runs));
    std::cout << "\ntrace written to " << trace_out << "\n";
  }
  return any_failure ? kExitTaskFailure : kExitOk;
}

int cmd_rescore(const std::string& trace_path, const std::string& suite_path, const std::string& out) {
  auto runs = read_trace(text::read_file(trace_path));
  if (!suite_path.empty()) {
    const auto suite = parse_suite(text::read_file(suite_path));
    for (auto& r : runs) r.suite = suite;
  }
  const std::string report = format_reports(rescore(runs));
  if (!out.empty()) text::write_file(out, report);
  std::cout << report;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrieval-augmented simulation agent"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  };
  auto add_runtime_overrides = [&common](CLI::App* sub) {
    sub->add_option("--index", common.index, "index file (default: knowledge.index, else built in memory)");
    sub->add_option("--env-spec", common.env_spec, "MiniGrid environment spec");
    sub->add_option("--n-max", common.n_max, "maximum attempts per task, applied to every scheme");
  };

  auto* build = app.add_subcommand("build-kb", "chunk and embed the manual and option document");
  add_common(build);
  std::string manual, option_doc, build_out;
  build->add_option("--manual", manual, "manual text file");
  build->add_option("--option-doc", option_doc, "option document");
  build->add_option("--out", build_out, "index output path");

  auto* run = app.add_subcommand("run", "run one request end to end");
  add_common(run);
  add_runtime_overrides(run);
  std::string scheme_name = "GPT4o-Full", request_text, request_file, run_trace;
  run->add_option("--scheme", scheme_name, "scheme name")->capture_default_str();
  run->add_option("--request", request_text, "request text");
  run->add_option("--request-file", request_file, "file holding the request text");
  run->add_option("--trace", run_trace, "write the attempt trace here");

  auto* bench = app.add_subcommand("bench", "score schemes over a task suite");
  add_common(bench);
  add_runtime_overrides(bench);
  std::vector<std::string> bench_schemes;
  std::string suite, bench_out, bench_trace;
  std::size_t workers = 1;
  bench->add_option("--scheme", bench_schemes, "scheme name, repeatable; 'all' for every preset");
  bench->add_option("--suite", suite, "task suite (JSON lines)");
  bench->add_option("--workers", workers, "concurrent tasks")->capture_default_str();
  bench->add_option("--out", bench_out, "report output path");
  bench->add_option("--trace", bench_trace, "trace output path (default: <out>.trace.jsonl)");

  auto* rescore_cmd = app.add_subcommand("rescore", "recompute reports from a saved trace");
  std::string trace_in, rescore_suite, rescore_out;
  rescore_cmd->add_option("--trace", trace_in, "trace file")->required()->check(CLI::ExistingFile);
  rescore_cmd->add_option("--suite", rescore_suite, "suite whose expected results replace the traced ones");
  rescore_cmd->add_option("--out", rescore_out, "report output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*build) return cmd_build_kb(common, manual, option_doc, build_out);
    if (*run) return cmd_run(common, scheme_name, request_text, request_file, run_trace);
    if (*bench) return cmd_bench(common, bench_schemes, suite, workers, bench_out, bench_trace);
    if (*rescore_cmd) return cmd_rescore(trace_in, rescore_suite, rescore_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
