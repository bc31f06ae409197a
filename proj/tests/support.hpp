#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "simagent/code_reasoner.hpp"
#include "simagent/error_report.hpp"
#include "simagent/knowledge_base.hpp"
#include "simagent/orchestrator.hpp"
#include "simagent/query_planner.hpp"
#include "simagent/sim_environment.hpp"
#include "simagent/text.hpp"

namespace simagent::testing {

inline std::filesystem::path data_dir() { return SIMAGENT_DATA_DIR; }

inline std::string fixture(const std::string& rel) { return text::read_file(data_dir() / rel); }

inline std::vector<KnowledgeChunk> minigrid_chunks() {
  auto chunks = chunk_manual(fixture("minigrid/manual.txt"));
  auto options = option_records_to_chunks(parse_option_document(fixture("minigrid/options.txt")));
  chunks.insert(chunks.end(), options.begin(), options.end());
  return chunks;
}

inline Templates minigrid_templates() {
  return Templates{PlannerPromptTemplate::parse(fixture("minigrid/planner.txt")),
                   PlannerPromptTemplate::parse(fixture("minigrid/error_planner.txt")),
                   ReasonerPromptTemplate::parse(fixture("minigrid/reasoner.txt"),
                                                 fixture("minigrid/static_knowledge.txt"))};
}

/// The hermetic stack: MiniGrid, hashing embedder, fixture index and templates.
struct Stack {
  MiniGridEnvironment env{load_environment_spec(fixture("minigrid/env_spec.txt"))};
  HashingEmbedder embedder;
  VectorIndex index = build_index(minigrid_chunks(), embedder);
  Templates templates = minigrid_templates();
  HintsConfig hints = HintsConfig::from_json(fixture("minigrid/hints.json"));

  TaskContext context(ChatProvider& planner, ChatProvider& coder, const Embedder* emb = nullptr,
                      LoopOptions options = {}) const {
    return TaskContext{env, &index, emb ? emb : &embedder, planner, coder, templates, hints, PricingTable{5.0, 15.0},
                       options};
  }
};

inline std::string fenced(const std::string& code) { return "```\n" + code + "\n```"; }

inline ScriptedProvider scripted(std::vector<ScriptRule> rules, std::string name = "scripted") {
  return ScriptedProvider(std::move(rules), std::move(name));
}

/// Brute-force ranking oracle: score every eligible chunk with a directly
/// written cosine, sort fully, cut at k.
inline std::vector<ScoredChunk> brute_force_top_k(const VectorIndex& index, const EmbeddingVector& q, std::size_t k,
                                                  SourceFilter filter) {
  auto norm = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  const double nq = norm(q.values);
  if (nq == 0.0) return {};
  std::vector<ScoredChunk> all;
  for (const auto& e : index.entries()) {
    if (filter == SourceFilter::manual_only && e.chunk.source != ChunkSource::manual) continue;
    const double ne = norm(e.embedding.values);
    double d = 0.0;
    for (std::size_t i = 0; i < q.values.size(); ++i) d += q.values[i] * e.embedding.values[i];
    all.push_back({e.chunk.id, ne == 0.0 ? 0.0 : d / (nq * ne)});
  }
  std::sort(all.begin(), all.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

/// Random corpus over a small vocabulary so that exact score ties occur.
inline std::vector<KnowledgeChunk> random_corpus(std::mt19937_64& rng, std::size_t n) {
  static const char* kWords[] = {"bus",  "load", "flow", "power", "option", "solver", "case", "model",
                                 "tol",  "gen",  "line", "angle", "ridge",  "plot",   "dc",   "ac"};
  std::uniform_int_distribution<int> len(1, 6);
  std::uniform_int_distribution<int> word(0, static_cast<int>(std::size(kWords)) - 1);
  std::bernoulli_distribution option_doc(0.3);
  std::vector<KnowledgeChunk> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string body;
    for (int w = len(rng); w > 0; --w) body += std::string(kWords[word(rng)]) + " ";
    char id[32];
    std::snprintf(id, sizeof id, "c%05zu", i);
    out.push_back({id, option_doc(rng) ? ChunkSource::option_doc : ChunkSource::manual, body});
  }
  return out;
}

}  // namespace simagent::testing
