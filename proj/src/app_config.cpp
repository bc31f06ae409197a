#include "simagent/app_config.hpp"

#include <chrono>

#include <json.hpp>

#include "simagent/text.hpp"

namespace simagent {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const json& j, const char* key) {
  if (!j.contains(key)) return {};
  fs::path p = j.at(key).get<std::string>();
  return p.is_absolute() ? p : base / p;
}

void require(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string("config is missing ") + what);
}

}  // namespace

AppConfig load_app_config(const fs::path& path) {
  AppConfig c;
  c.source = path;
  json doc;
  try {
    doc = json::parse(text::read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  const fs::path base = path.parent_path();
  const json empty = json::object();
  try {
    const json& provider = doc.contains("provider") ? doc["provider"] : empty;
    c.provider_kind = provider.value("kind", c.provider_kind);
    c.planner_script = resolve(base, provider, "planner_script");
    c.coder_script = resolve(base, provider, "coder_script");
    if (c.provider_kind != "scripted" && c.provider_kind != "live")
      throw ConfigError("provider.kind must be scripted or live, got " + c.provider_kind);

    const json& embedder = doc.contains("embedder") ? doc["embedder"] : empty;
    c.embedder_kind = embedder.value("kind", c.embedder_kind);
    c.embedding_dimension = embedder.value("dimension", c.embedding_dimension);
    if (c.embedder_kind != "hashing" && c.embedder_kind != "live")
      throw ConfigError("embedder.kind must be hashing or live, got " + c.embedder_kind);

    const json& env = doc.contains("environment") ? doc["environment"] : empty;
    c.environment_kind = env.value("kind", c.environment_kind);
    c.env_spec = resolve(base, env, "spec");
    c.environment_command = env.value("command", std::vector<std::string>{});
    c.environment_timeout_ms = env.value("timeout_ms", c.environment_timeout_ms);
    if (c.environment_kind != "minigrid" && c.environment_kind != "subprocess")
      throw ConfigError("environment.kind must be minigrid or subprocess, got " + c.environment_kind);

    const json& kb = doc.contains("knowledge") ? doc["knowledge"] : empty;
    c.manual = resolve(base, kb, "manual");
    c.option_doc = resolve(base, kb, "option_doc");
    c.index = resolve(base, kb, "index");
    c.chunk_chars = kb.value("chunk_chars", c.chunk_chars);
    c.overlap_chars = kb.value("overlap_chars", c.overlap_chars);

    const json& tmpl = doc.contains("templates") ? doc["templates"] : empty;
    c.planner_template = resolve(base, tmpl, "planner");
    c.error_planner_template = resolve(base, tmpl, "error_planner");
    c.reasoner_template = resolve(base, tmpl, "reasoner");
    c.static_knowledge = resolve(base, tmpl, "static_knowledge");

    c.hints = resolve(base, doc, "hints");
    c.schemes = resolve(base, doc, "schemes");
    c.suite = resolve(base, doc, "suite");

    const json& pricing = doc.contains("pricing") ? doc["pricing"] : empty;
    c.pricing.usd_per_million_input = pricing.value("usd_per_million_input", 0.0);
    c.pricing.usd_per_million_output = pricing.value("usd_per_million_output", 0.0);
    if (c.pricing.usd_per_million_input < 0 || c.pricing.usd_per_million_output < 0)
      throw ConfigError("pricing rates must be nonnegative");

    const json& loop = doc.contains("loop") ? doc["loop"] : empty;
    if (loop.contains("n_max")) c.n_max = loop["n_max"].get<int>();
    c.loop.top_k = loop.value("top_k", c.loop.top_k);
    c.loop.history_cap = loop.value("history_cap", c.loop.history_cap);
    c.loop.plan_error_queries = loop.value("plan_error_queries", c.loop.plan_error_queries);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  if (c.n_max && *c.n_max < 1) throw ConfigError("loop.n_max must be at least 1");
  if (c.loop.top_k == 0) throw ConfigError("loop.top_k must be at least 1");
  return c;
}

TaskContext Runtime::context() const {
  return TaskContext{*environment, index ? &*index : nullptr, embedder.get(), *planner, *coder,
                     templates,    hints,                      pricing,        loop};
}

std::vector<KnowledgeChunk> knowledge_chunks(const AppConfig& config) {
  require(config.manual, "knowledge.manual");
  require(config.option_doc, "knowledge.option_doc");
  auto chunks = chunk_manual(text::read_file(config.manual), config.chunk_chars, config.overlap_chars);
  auto options = option_records_to_chunks(parse_option_document(text::read_file(config.option_doc)));
  chunks.insert(chunks.end(), std::make_move_iterator(options.begin()), std::make_move_iterator(options.end()));
  return chunks;
}

std::unique_ptr<Runtime> make_runtime(const AppConfig& config) {
  auto rt = std::make_unique<Runtime>();

  if (config.provider_kind == "scripted") {
    require(config.planner_script, "provider.planner_script");
    require(config.coder_script, "provider.coder_script");
    rt->planner = std::make_unique<ScriptedProvider>(
        ScriptedProvider::parse_rules(text::read_file(config.planner_script)), "scripted:" + config.planner_script.filename().string());
    rt->coder = std::make_unique<ScriptedProvider>(
        ScriptedProvider::parse_rules(text::read_file(config.coder_script)), "scripted:" + config.coder_script.filename().string());
  } else {
    auto live = LiveProviderConfig::from_environment();
    if (!live) throw ConfigError("provider.kind=live needs SIMAGENT_LLM_URL (and usually SIMAGENT_LLM_KEY)");
    rt->planner = std::make_unique<LiveChatProvider>(*live);
    rt->coder = std::make_unique<LiveChatProvider>(*live);
  }

  if (config.embedder_kind == "hashing") {
    rt->embedder = std::make_unique<HashingEmbedder>(config.embedding_dimension);
  } else {
    auto live = LiveEmbedderConfig::from_environment();
    if (!live) throw ConfigError("embedder.kind=live needs SIMAGENT_EMBED_URL");
    rt->embedder = std::make_unique<LiveEmbedder>(*live, &rt->embed_ledger);
  }

  if (config.environment_kind == "minigrid") {
    require(config.env_spec, "environment.spec");
    rt->environment = std::make_unique<MiniGridEnvironment>(load_environment_spec(text::read_file(config.env_spec)));
  } else {
    if (config.environment_command.empty()) throw ConfigError("environment.command is empty");
    rt->environment = std::make_unique<SubprocessEnvironment>(config.environment_command,
                                                              std::chrono::milliseconds(config.environment_timeout_ms));
  }

  require(config.planner_template, "templates.planner");
  require(config.error_planner_template, "templates.error_planner");
  require(config.reasoner_template, "templates.reasoner");
  rt->templates.planner = PlannerPromptTemplate::parse(text::read_file(config.planner_template));
  rt->templates.error_planner = PlannerPromptTemplate::parse(text::read_file(config.error_planner_template));
  rt->templates.reasoner = ReasonerPromptTemplate::parse(
      text::read_file(config.reasoner_template),
      config.static_knowledge.empty() ? std::string() : text::read_file(config.static_knowledge));

  if (!config.hints.empty()) rt->hints = HintsConfig::from_json(text::read_file(config.hints));
  rt->schemes = config.schemes.empty() ? builtin_schemes() : parse_schemes(text::read_file(config.schemes));
  if (config.n_max)
    for (auto& s : rt->schemes) s.n_max = *config.n_max;

  if (!config.index.empty() && fs::exists(config.index)) {
    rt->index = VectorIndex::deserialize(text::read_file(config.index));
    rt->index_origin = config.index.string();
  } else {
    rt->index = build_index(knowledge_chunks(config), *rt->embedder);
    rt->index_origin = "built in memory";
  }
  if (rt->index->family() != rt->embedder->family())
    throw ConfigError("index " + rt->index_origin + " was built with " + rt->index->family() + ", embedder is " +
                      rt->embedder->family());

  rt->pricing = config.pricing;
  rt->loop = config.loop;
  return rt;
}

}  // namespace simagent
