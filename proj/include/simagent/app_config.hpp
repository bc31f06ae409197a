#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "simagent/error_report.hpp"
#include "simagent/evaluation.hpp"
#include "simagent/knowledge_base.hpp"
#include "simagent/llm_gateway.hpp"
#include "simagent/orchestrator.hpp"
#include "simagent/scheme.hpp"
#include "simagent/sim_environment.hpp"

// Run configuration shared by the command-line tool and the tests. Relative
// paths in the config file resolve against the file's directory.
namespace simagent {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AppConfig {
  std::filesystem::path source;  // the config file itself

  std::string provider_kind = "scripted";  // scripted | live
  std::filesystem::path planner_script;
  std::filesystem::path coder_script;

  std::string embedder_kind = "hashing";  // hashing | live
  std::size_t embedding_dimension = HashingEmbedder::kDefaultDimension;

  std::string environment_kind = "minigrid";  // minigrid | subprocess
  std::filesystem::path env_spec;
  std::vector<std::string> environment_command;
  int environment_timeout_ms = 30000;

  std::filesystem::path manual;
  std::filesystem::path option_doc;
  std::filesystem::path index;
  std::size_t chunk_chars = kDefaultChunkChars;
  std::size_t overlap_chars = kDefaultOverlapChars;

  std::filesystem::path planner_template;
  std::filesystem::path error_planner_template;
  std::filesystem::path reasoner_template;
  std::filesystem::path static_knowledge;
  std::filesystem::path hints;
  std::filesystem::path schemes;  // empty: built-in presets
  std::filesystem::path suite;

  PricingTable pricing;
  std::optional<int> n_max;  // overrides every scheme when set
  LoopOptions loop;
};

AppConfig load_app_config(const std::filesystem::path& path);

/// Owns everything a TaskContext points at.
struct Runtime {
  std::unique_ptr<ChatProvider> planner;
  std::unique_ptr<ChatProvider> coder;
  std::unique_ptr<Embedder> embedder;
  std::unique_ptr<SimulationEnvironment> environment;
  Templates templates;
  HintsConfig hints;
  std::optional<VectorIndex> index;
  std::string index_origin;  // file path, or "built in memory"
  std::vector<SchemeConfig> schemes;
  PricingTable pricing;
  LoopOptions loop;
  CostLedger embed_ledger;  // usage of a live embedder

  TaskContext context() const;
};

/// Chunks the manual and option document into one list.
std::vector<KnowledgeChunk> knowledge_chunks(const AppConfig& config);

/// Loads providers, templates, hints, schemes and the environment. The index
/// is read from `config.index` when that file exists, otherwise built.
std::unique_ptr<Runtime> make_runtime(const AppConfig& config);

}  // namespace simagent
