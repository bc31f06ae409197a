#include "simagent/knowledge_base.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_set>

#include "simagent/query_planner.hpp"
#include "simagent/text.hpp"

namespace simagent {

MalformedRecord::MalformedRecord(std::size_t line_no, const std::string& reason)
    : KnowledgeBaseError("malformed option record at line " + std::to_string(line_no) + ": " + reason),
      line_no_(line_no) {}

DuplicateOption::DuplicateOption(std::string name, std::size_t line_no)
    : KnowledgeBaseError("duplicate option '" + name + "' at line " + std::to_string(line_no)),
      name_(std::move(name)),
      line_no_(line_no) {}

EmbedderFailure::EmbedderFailure(std::string subject, const std::string& cause)
    : KnowledgeBaseError("embedding failed for " + subject + ": " + cause), subject_(std::move(subject)) {}

DuplicateChunkId::DuplicateChunkId(const std::string& id) : KnowledgeBaseError("duplicate chunk id '" + id + "'") {}

namespace {
std::string describe_failures(const std::vector<std::pair<std::size_t, std::string>>& failures) {
  std::string msg = "retrieval failed for " + std::to_string(failures.size()) + " sub-quer" +
                    (failures.size() == 1 ? "y" : "ies");
  for (const auto& [id, what] : failures) msg += "; #" + std::to_string(id) + ": " + what;
  return msg;
}
}  // namespace

RetrievalFailure::RetrievalFailure(std::vector<std::pair<std::size_t, std::string>> failures)
    : KnowledgeBaseError(describe_failures(failures)), failures_(std::move(failures)) {}

// ---------------------------------------------------------------------------
// Option document

std::vector<OptionRecord> parse_option_document(std::string_view text_in) {
  std::vector<OptionRecord> records;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  for (auto raw : text::lines(text_in)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;

    const auto fields = text::split(line, '|');
    if (fields.size() != 4)
      throw MalformedRecord(line_no, "expected 4 '|'-separated fields, found " + std::to_string(fields.size()));

    OptionRecord r;
    r.name = std::string(text::trim(fields[0]));
    if (r.name.empty()) throw MalformedRecord(line_no, "empty option name");
    r.default_value_format = std::string(text::trim(fields[1]));
    for (auto dep : text::split(fields[2], ',')) {
      auto d = text::trim(dep);
      if (!d.empty()) r.function_dependencies.emplace_back(d);
    }
    if (r.function_dependencies.empty())
      throw MalformedRecord(line_no, "option '" + r.name + "' lists no function dependencies");
    r.description = std::string(text::trim(fields[3]));

    if (!seen.insert(r.name).second) throw DuplicateOption(r.name, line_no);
    records.push_back(std::move(r));
  }
  return records;
}

std::string serialize_option_record(const OptionRecord& r) {
  return r.name + " | " + r.default_value_format + " | " + text::join(r.function_dependencies, ", ") + " | " +
         r.description;
}

std::string serialize_option_document(const std::vector<OptionRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += serialize_option_record(r);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chunking

std::string_view to_string(ChunkSource s) { return s == ChunkSource::manual ? "manual" : "option_doc"; }

ChunkSource chunk_source_from_string(std::string_view s) {
  if (s == "manual") return ChunkSource::manual;
  if (s == "option_doc") return ChunkSource::option_doc;
  throw KnowledgeBaseError("unknown chunk source '" + std::string(s) + "'");
}

std::vector<KnowledgeChunk> chunk_manual(std::string_view text_in, std::size_t chunk_chars,
                                         std::size_t overlap_chars) {
  if (chunk_chars == 0) throw InvalidChunking("chunk size must be positive");
  if (overlap_chars >= chunk_chars) throw InvalidChunking("overlap must be smaller than the chunk size");

  std::vector<KnowledgeChunk> chunks;
  const std::size_t n = text_in.size();
  std::size_t start = 0;
  while (start < n) {
    const std::size_t end = std::min(start + chunk_chars, n);
    std::size_t cut = end;
    if (end < n) {
      // Prefer to end just after a newline, as long as the next window still
      // starts beyond this one.
      for (std::size_t pos = end; pos > start + overlap_chars; --pos) {
        if (text_in[pos - 1] == '\n') {
          cut = pos;
          break;
        }
      }
    }
    char id[32];
    std::snprintf(id, sizeof id, "manual:%05zu", chunks.size());
    chunks.push_back({id, ChunkSource::manual, std::string(text_in.substr(start, cut - start))});
    if (cut == n) break;
    start = cut - overlap_chars;
  }
  return chunks;
}

std::vector<KnowledgeChunk> option_records_to_chunks(const std::vector<OptionRecord>& records) {
  std::vector<KnowledgeChunk> chunks;
  chunks.reserve(records.size());
  for (const auto& r : records) chunks.push_back({"option:" + r.name, ChunkSource::option_doc, serialize_option_record(r)});
  return chunks;
}

// ---------------------------------------------------------------------------
// Index

VectorIndex::VectorIndex(std::vector<IndexedChunk> entries, std::size_t dimension, std::string family)
    : entries_(std::move(entries)), dimension_(dimension), family_(std::move(family)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].embedding.dimension() != dimension_)
      throw KnowledgeBaseError("chunk '" + entries_[i].chunk.id + "' has embedding dimension " +
                               std::to_string(entries_[i].embedding.dimension()) + ", index expects " +
                               std::to_string(dimension_));
    if (!by_id_.emplace(entries_[i].chunk.id, i).second) throw DuplicateChunkId(entries_[i].chunk.id);
  }
}

const IndexedChunk& VectorIndex::at(std::string_view id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw std::out_of_range("no chunk '" + std::string(id) + "' in index");
  return entries_[it->second];
}

std::size_t VectorIndex::count(ChunkSource source) const {
  return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(),
                                                [&](const IndexedChunk& e) { return e.chunk.source == source; }));
}

std::string VectorIndex::serialize() const {
  std::string out = "simagent-index 1\n";
  out += "family " + family_ + "\n";
  out += "dim " + std::to_string(dimension_) + "\n";
  out += "count " + std::to_string(entries_.size()) + "\n";
  char buf[40];
  for (const auto& e : entries_) {
    out += "chunk\t" + text::escape_field(e.chunk.id) + "\t" + std::string(to_string(e.chunk.source)) + "\t" +
           text::escape_field(e.chunk.text) + "\n";
    out += "vec";
    for (double v : e.embedding.values) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

VectorIndex VectorIndex::deserialize(std::string_view data) {
  const auto all = text::lines(data);
  std::size_t pos = 0;
  auto next = [&](std::string_view what) -> std::string_view {
    if (pos >= all.size()) throw KnowledgeBaseError("index file truncated: expected " + std::string(what));
    return all[pos++];
  };
  auto header_value = [&](std::string_view key) -> std::string {
    auto line = next(key);
    if (!line.starts_with(key) || line.size() <= key.size() || line[key.size()] != ' ')
      throw KnowledgeBaseError("index file: expected '" + std::string(key) + "' at line " + std::to_string(pos));
    return std::string(line.substr(key.size() + 1));
  };

  if (next("header") != "simagent-index 1") throw KnowledgeBaseError("not a simagent index file (bad header)");
  std::string family = header_value("family");
  std::size_t dim = 0, count = 0;
  try {
    dim = std::stoul(header_value("dim"));
    count = std::stoul(header_value("count"));
  } catch (const std::logic_error&) {
    throw KnowledgeBaseError("index file: bad dim/count header");
  }

  std::vector<IndexedChunk> entries;
  entries.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto chunk_line = next("chunk");
    auto fields = text::split(chunk_line, '\t');
    if (fields.size() != 4 || fields[0] != "chunk")
      throw KnowledgeBaseError("index file: malformed chunk line " + std::to_string(pos));
    IndexedChunk e;
    e.chunk.id = text::unescape_field(fields[1]);
    e.chunk.source = chunk_source_from_string(fields[2]);
    e.chunk.text = text::unescape_field(fields[3]);

    auto vec_line = next("vec");
    if (!vec_line.starts_with("vec")) throw KnowledgeBaseError("index file: malformed vec line " + std::to_string(pos));
    std::string values(vec_line.substr(3));
    const char* p = values.c_str();
    e.embedding.values.reserve(dim);
    while (true) {
      char* endp = nullptr;
      const double v = std::strtod(p, &endp);
      if (endp == p) break;
      e.embedding.values.push_back(v);
      p = endp;
    }
    if (e.embedding.values.size() != dim)
      throw KnowledgeBaseError("index file: vector of chunk '" + e.chunk.id + "' has " +
                               std::to_string(e.embedding.values.size()) + " values, expected " + std::to_string(dim));
    entries.push_back(std::move(e));
  }
  return VectorIndex(std::move(entries), dim, std::move(family));
}

VectorIndex build_index(const std::vector<KnowledgeChunk>& chunks, const Embedder& embedder) {
  std::unordered_set<std::string_view> ids;
  for (const auto& c : chunks)
    if (!ids.insert(c.id).second) throw DuplicateChunkId(c.id);

  std::vector<IndexedChunk> entries;
  entries.reserve(chunks.size());
  for (const auto& c : chunks) {
    if (c.text.empty()) throw KnowledgeBaseError("chunk '" + c.id + "' has empty text");
    EmbeddingVector v;
    try {
      v = embedder.embed(c.text);
    } catch (const std::exception& e) {
      throw EmbedderFailure("chunk " + c.id, e.what());
    }
    entries.push_back({c, std::move(v)});
  }
  return VectorIndex(std::move(entries), embedder.dimension(), embedder.family());
}

// ---------------------------------------------------------------------------
// Retrieval

namespace {

// Strict weak order: higher score first, then ascending id.
bool ranks_before(const ScoredChunk& a, const ScoredChunk& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

}  // namespace

std::vector<ScoredChunk> retrieve_embedded(const VectorIndex& index, const EmbeddingVector& query, std::size_t k,
                                           SourceFilter filter) {
  if (k == 0) throw std::invalid_argument("top-k must be positive");
  if (index.empty() || query.is_zero()) return {};
  if (query.dimension() != index.dimension())
    throw KnowledgeBaseError("query dimension " + std::to_string(query.dimension()) + " does not match index dimension " +
                             std::to_string(index.dimension()));

  // Bounded heap whose top is the weakest of the current best k.
  auto weaker_on_top = [](const ScoredChunk& a, const ScoredChunk& b) { return ranks_before(a, b); };
  std::priority_queue<ScoredChunk, std::vector<ScoredChunk>, decltype(weaker_on_top)> best(weaker_on_top);
  for (const auto& e : index.entries()) {
    if (filter == SourceFilter::manual_only && e.chunk.source != ChunkSource::manual) continue;
    ScoredChunk candidate{e.chunk.id, cosine(query, e.embedding)};
    if (best.size() < k) {
      best.push(std::move(candidate));
    } else if (ranks_before(candidate, best.top())) {
      best.pop();
      best.push(std::move(candidate));
    }
  }
  std::vector<ScoredChunk> out;
  out.reserve(best.size());
  while (!best.empty()) {
    out.push_back(best.top());
    best.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<ScoredChunk> retrieve(const VectorIndex& index, const Embedder& embedder, std::string_view query,
                                  std::size_t k, SourceFilter filter) {
  if (k == 0) throw std::invalid_argument("top-k must be positive");
  if (!index.empty() && embedder.family() != index.family())
    throw KnowledgeBaseError("index was built with embedder '" + index.family() + "' but queried with '" +
                             embedder.family() + "'");
  EmbeddingVector q;
  try {
    q = embedder.embed(query);
  } catch (const std::exception& e) {
    throw EmbedderFailure("query", e.what());
  }
  return retrieve_embedded(index, q, k, filter);
}

std::string retrieval_text(const SubQuery& q) {
  if (q.kind == SubQueryKind::option && q.value && !q.value->empty()) return q.keyword + " " + *q.value;
  return q.keyword;
}

std::vector<ContextChunk> merge_ranked(const VectorIndex& index, const std::vector<std::vector<ScoredChunk>>& ranked) {
  std::vector<ContextChunk> merged;
  std::map<std::string, std::size_t, std::less<>> position;
  for (const auto& list : ranked) {
    for (const auto& hit : list) {
      auto [it, inserted] = position.emplace(hit.id, merged.size());
      if (!inserted) {
        merged[it->second].score = std::max(merged[it->second].score, hit.score);
        continue;
      }
      const auto& entry = index.at(hit.id);
      merged.push_back({hit.id, entry.chunk.source, entry.chunk.text, hit.score});
    }
  }
  return merged;
}

RetrievalResult retrieve_parallel(const VectorIndex& index, const Embedder& embedder, const QueryPlan& plan,
                                  std::size_t k, SourceFilter filter) {
  RetrievalResult result;
  if (plan.subqueries.empty()) return result;

  std::vector<std::future<std::vector<ScoredChunk>>> pending;
  pending.reserve(plan.subqueries.size());
  for (const auto& sq : plan.subqueries) {
    pending.push_back(std::async(std::launch::async, [&index, &embedder, text = retrieval_text(sq), k, filter] {
      return retrieve(index, embedder, text, k, filter);
    }));
  }

  std::vector<std::pair<std::size_t, std::string>> failures;
  std::vector<std::vector<ScoredChunk>> ranked;
  ranked.reserve(pending.size());
  for (std::size_t i = 0; i < pending.size(); ++i) {
    try {
      ranked.push_back(pending[i].get());
    } catch (const std::exception& e) {
      failures.emplace_back(plan.subqueries[i].id, e.what());
      ranked.emplace_back();
    }
  }
  if (!failures.empty()) throw RetrievalFailure(std::move(failures));

  for (std::size_t i = 0; i < ranked.size(); ++i) result.per_subquery[plan.subqueries[i].id] = ranked[i];
  result.merged = merge_ranked(index, ranked);
  return result;
}

}  // namespace simagent
