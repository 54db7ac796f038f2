#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "memsearch/embedding.hpp"

namespace memsearch {

enum class Tool { keyword, semantic, page };

const char* tool_name(Tool tool);
Tool tool_from_name(const std::string& name);

struct Page {
    std::size_t page_id = 0;
    std::string source_id;
    std::string session_label;
    std::string text;
    std::size_t token_count = 0;
};

struct RawPage {
    std::string source_id;
    std::string session_label;
    std::string text;
};

struct RetrievalHit {
    std::size_t page_id = 0;
    double score = 0.0;
    Tool tool = Tool::keyword;
};

// Shared result ordering: score descending, ties by ascending page_id.
void sort_hits(std::vector<RetrievalHit>& hits);

struct FetchResult {
    std::vector<Page> pages;
    std::vector<long long> skipped;
};

// Immutable page store with a BM25 inverted index and a dense vector index.
// Safe for concurrent readers once built.
class MemoryStore {
public:
    // Page ids are assigned in input order, contiguous from 0.
    static MemoryStore build(const std::vector<RawPage>& raw_pages, const Embedder& embedder);

    static MemoryStore from_json(const nlohmann::json& doc);
    static MemoryStore load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    void save(const std::filesystem::path& path) const;

    const std::vector<Page>& pages() const { return pages_; }
    const Page& page(std::size_t page_id) const;
    std::size_t size() const { return pages_.size(); }
    const std::string& embedder_id() const { return embedder_id_; }
    std::size_t dimension() const { return dimension_; }
    const EmbeddingVector& vector(std::size_t page_id) const;

    // BM25 (k1=1.2, b=0.75, Lucene-style idf) over the keyword set treated
    // as one query. Only matching pages are returned.
    std::vector<RetrievalHit> search_keyword(const std::vector<std::string>& keywords,
                                             std::size_t limit) const;

    // Cosine similarity against every stored page embedding.
    std::vector<RetrievalHit> search_semantic(const std::string& query, const Embedder& embedder,
                                              std::size_t limit) const;

    // In-range indices in request order; out-of-range indices are reported
    // in FetchResult::skipped, never an error.
    FetchResult fetch_pages(const std::vector<long long>& indices) const;

private:
    MemoryStore() = default;
    void build_keyword_index();

    std::vector<Page> pages_;
    std::vector<EmbeddingVector> vectors_;
    // term -> (page_id, term frequency)
    std::unordered_map<std::string, std::vector<std::pair<std::uint32_t, std::uint32_t>>> keyword_index_;
    double avg_token_count_ = 0.0;
    std::string embedder_id_;
    std::size_t dimension_ = 0;
};

inline constexpr double kBm25K1 = 1.2;
inline constexpr double kBm25B = 0.75;

// Parses the corpus ingestion format: a JSON array of
// {source_id, session_label?, text} records, one page per record.
std::vector<RawPage> parse_corpus_records(const nlohmann::json& doc);
std::vector<RawPage> load_corpus_records(const std::filesystem::path& path);

}  // namespace memsearch
