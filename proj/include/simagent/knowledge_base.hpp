#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "simagent/llm_gateway.hpp"

namespace simagent {

struct QueryPlan;
struct SubQuery;

// ---------------------------------------------------------------------------
// Triple-based option document
//
// One option per line, four `|`-separated fields:
//
//   <name> | <default value or format> | <fn1, fn2, ...> | <description>
//
// Lines whose first non-blank character is `#` are comments.

struct OptionRecord {
  std::string name;
  std::string default_value_format;
  std::vector<std::string> function_dependencies;
  std::string description;

  bool operator==(const OptionRecord&) const = default;
};

class KnowledgeBaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedRecord : public KnowledgeBaseError {
 public:
  MalformedRecord(std::size_t line_no, const std::string& reason);
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class DuplicateOption : public KnowledgeBaseError {
 public:
  DuplicateOption(std::string name, std::size_t line_no);
  const std::string& name() const noexcept { return name_; }
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::string name_;
  std::size_t line_no_;
};

std::vector<OptionRecord> parse_option_document(std::string_view text);
/// Canonical one-line form: fields trimmed, joined by " | ", deps by ", ".
std::string serialize_option_record(const OptionRecord& r);
std::string serialize_option_document(const std::vector<OptionRecord>& records);

// ---------------------------------------------------------------------------
// Chunks and the vector index

enum class ChunkSource { manual, option_doc };
std::string_view to_string(ChunkSource s);
ChunkSource chunk_source_from_string(std::string_view s);

struct KnowledgeChunk {
  std::string id;
  ChunkSource source = ChunkSource::manual;
  std::string text;
};

class InvalidChunking : public KnowledgeBaseError {
 public:
  using KnowledgeBaseError::KnowledgeBaseError;
};

inline constexpr std::size_t kDefaultChunkChars = 1200;
inline constexpr std::size_t kDefaultOverlapChars = 200;
inline constexpr std::size_t kDefaultTopK = 4;

/// Fixed-size windows (in bytes) that overlap by exactly `overlap_chars`.
/// Each window is cut just after the last newline it contains, provided that
/// cut still advances past the overlap; otherwise it is cut at full width.
/// Dropping the first `overlap_chars` of every chunk after the first and
/// concatenating reproduces `text`.
std::vector<KnowledgeChunk> chunk_manual(std::string_view text,
                                         std::size_t chunk_chars = kDefaultChunkChars,
                                         std::size_t overlap_chars = kDefaultOverlapChars);

/// One chunk per record, id "option:<name>", text = canonical serialized line.
std::vector<KnowledgeChunk> option_records_to_chunks(const std::vector<OptionRecord>& records);

class EmbedderFailure : public KnowledgeBaseError {
 public:
  EmbedderFailure(std::string subject, const std::string& cause);
  const std::string& subject() const noexcept { return subject_; }

 private:
  std::string subject_;
};

class DuplicateChunkId : public KnowledgeBaseError {
 public:
  explicit DuplicateChunkId(const std::string& id);
};

struct IndexedChunk {
  KnowledgeChunk chunk;
  EmbeddingVector embedding;
};

struct ScoredChunk {
  std::string id;
  double score = 0.0;

  bool operator==(const ScoredChunk&) const = default;
};

enum class SourceFilter { all, manual_only };

/// Immutable after construction; concurrent reads are safe.
class VectorIndex {
 public:
  VectorIndex() = default;
  VectorIndex(std::vector<IndexedChunk> entries, std::size_t dimension, std::string family);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t dimension() const noexcept { return dimension_; }
  const std::string& family() const noexcept { return family_; }
  const std::vector<IndexedChunk>& entries() const noexcept { return entries_; }

  /// Throws std::out_of_range for an unknown id.
  const IndexedChunk& at(std::string_view id) const;
  std::size_t count(ChunkSource source) const;

  /// Flat text format, exact on reload (17 significant digits per value):
  ///   simagent-index 1
  ///   family <name>
  ///   dim <D>
  ///   count <N>
  ///   then per chunk: "chunk\t<id>\t<source>\t<text>" and "vec <D values>",
  ///   with id and text backslash-escaped.
  std::string serialize() const;
  static VectorIndex deserialize(std::string_view data);

 private:
  std::vector<IndexedChunk> entries_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::size_t dimension_ = 0;
  std::string family_;
};

/// Fails with DuplicateChunkId before any embedding call when ids collide.
VectorIndex build_index(const std::vector<KnowledgeChunk>& chunks, const Embedder& embedder);

/// Exact top-k by cosine similarity, ties broken by ascending chunk id.
/// Returns min(k, eligible corpus) items; a zero-norm query returns [].
std::vector<ScoredChunk> retrieve(const VectorIndex& index, const Embedder& embedder,
                                  std::string_view query, std::size_t k,
                                  SourceFilter filter = SourceFilter::all);

/// Same ranking for an already-embedded query.
std::vector<ScoredChunk> retrieve_embedded(const VectorIndex& index, const EmbeddingVector& query,
                                           std::size_t k, SourceFilter filter = SourceFilter::all);

struct ContextChunk {
  std::string id;
  ChunkSource source = ChunkSource::manual;
  std::string text;
  double score = 0.0;
};

struct RetrievalResult {
  /// Keyed by sub-query id.
  std::map<std::size_t, std::vector<ScoredChunk>> per_subquery;
  /// First-occurrence order over sub-queries in plan order, no duplicate ids;
  /// each entry carries its best score across sub-queries.
  std::vector<ContextChunk> merged;

  bool empty() const noexcept { return per_subquery.empty() && merged.empty(); }
};

/// Aggregates the failures of individual sub-queries.
class RetrievalFailure : public KnowledgeBaseError {
 public:
  explicit RetrievalFailure(std::vector<std::pair<std::size_t, std::string>> failures);
  const std::vector<std::pair<std::size_t, std::string>>& failures() const noexcept { return failures_; }

 private:
  std::vector<std::pair<std::size_t, std::string>> failures_;
};

/// The text a sub-query is embedded as.
std::string retrieval_text(const SubQuery& q);

/// Runs one retrieval per sub-query concurrently, then assembles results in
/// plan order so the outcome does not depend on scheduling.
RetrievalResult retrieve_parallel(const VectorIndex& index, const Embedder& embedder,
                                  const QueryPlan& plan, std::size_t k,
                                  SourceFilter filter = SourceFilter::all);

/// Folds ranked lists (in the given order) into the merged context list.
std::vector<ContextChunk> merge_ranked(const VectorIndex& index,
                                       const std::vector<std::vector<ScoredChunk>>& ranked);

}  // namespace simagent
