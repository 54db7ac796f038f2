#include "memsearch/memstore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "memsearch/errors.hpp"
#include "memsearch/text.hpp"

namespace memsearch {

const char* tool_name(Tool tool) {
    switch (tool) {
        case Tool::keyword: return "keyword";
        case Tool::semantic: return "semantic";
        case Tool::page: return "page";
    }
    return "unknown";
}

Tool tool_from_name(const std::string& name) {
    if (name == "keyword") return Tool::keyword;
    if (name == "semantic") return Tool::semantic;
    if (name == "page") return Tool::page;
    throw Error(ErrorCode::invalid_argument, "unknown tool: " + name);
}

void sort_hits(std::vector<RetrievalHit>& hits) {
    std::sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.page_id < b.page_id;
    });
}

MemoryStore MemoryStore::build(const std::vector<RawPage>& raw_pages, const Embedder& embedder) {
    if (raw_pages.empty()) {
        throw Error(ErrorCode::corpus_empty, "cannot build a store from an empty corpus");
    }
    MemoryStore store;
    store.embedder_id_ = embedder.id();
    store.dimension_ = embedder.dimension();
    store.pages_.reserve(raw_pages.size());
    store.vectors_.reserve(raw_pages.size());

    for (std::size_t i = 0; i < raw_pages.size(); ++i) {
        const RawPage& raw = raw_pages[i];
        if (raw.text.empty()) {
            throw Error(ErrorCode::corpus_empty,
                        "page " + std::to_string(i) + " has empty text");
        }
        Page page;
        page.page_id = i;
        page.source_id = raw.source_id;
        page.session_label = raw.session_label;
        page.text = raw.text;
        page.token_count = count_tokens(raw.text);
        store.pages_.push_back(std::move(page));
        try {
            store.vectors_.push_back(embedder.embed(raw.text));
        } catch (const Error& e) {
            throw Error(ErrorCode::provider_error,
                        "embedding page " + std::to_string(i) + " failed: " + e.what());
        }
    }
    store.build_keyword_index();
    return store;
}

void MemoryStore::build_keyword_index() {
    keyword_index_.clear();
    double total = 0.0;
    for (const Page& page : pages_) {
        total += static_cast<double>(page.token_count);
        std::unordered_map<std::string, std::uint32_t> freqs;
        for (const std::string& term : tokenize(page.text)) {
            ++freqs[term];
        }
        for (const auto& [term, tf] : freqs) {
            keyword_index_[term].emplace_back(static_cast<std::uint32_t>(page.page_id), tf);
        }
    }
    avg_token_count_ = pages_.empty() ? 0.0 : total / static_cast<double>(pages_.size());
}

const Page& MemoryStore::page(std::size_t page_id) const {
    if (page_id >= pages_.size()) {
        throw Error(ErrorCode::invalid_argument, "page id out of range: " + std::to_string(page_id));
    }
    return pages_[page_id];
}

const EmbeddingVector& MemoryStore::vector(std::size_t page_id) const {
    if (page_id >= vectors_.size()) {
        throw Error(ErrorCode::invalid_argument, "page id out of range: " + std::to_string(page_id));
    }
    return vectors_[page_id];
}

std::vector<RetrievalHit> MemoryStore::search_keyword(const std::vector<std::string>& keywords,
                                                      std::size_t limit) const {
    // The keyword set is one query: unique terms over all keyword strings.
    std::set<std::string> terms;
    for (const std::string& keyword : keywords) {
        for (std::string& term : tokenize(keyword)) {
            terms.insert(std::move(term));
        }
    }
    if (terms.empty()) {
        throw Error(ErrorCode::invalid_query, "keyword query is empty after normalization");
    }
    if (limit == 0) {
        return {};
    }

    const double n = static_cast<double>(pages_.size());
    std::unordered_map<std::uint32_t, double> scores;
    for (const std::string& term : terms) {
        auto it = keyword_index_.find(term);
        if (it == keyword_index_.end()) {
            continue;
        }
        const auto& postings = it->second;
        double df = static_cast<double>(postings.size());
        double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
        for (const auto& [page_id, tf] : postings) {
            double dl = static_cast<double>(pages_[page_id].token_count);
            double tf_d = static_cast<double>(tf);
            double denom = tf_d + kBm25K1 * (1.0 - kBm25B + kBm25B * dl / avg_token_count_);
            scores[page_id] += idf * (tf_d * (kBm25K1 + 1.0)) / denom;
        }
    }

    std::vector<RetrievalHit> hits;
    hits.reserve(scores.size());
    for (const auto& [page_id, score] : scores) {
        hits.push_back({page_id, score, Tool::keyword});
    }
    sort_hits(hits);
    if (hits.size() > limit) {
        hits.resize(limit);
    }
    return hits;
}

std::vector<RetrievalHit> MemoryStore::search_semantic(const std::string& query,
                                                       const Embedder& embedder,
                                                       std::size_t limit) const {
    if (query.empty()) {
        throw Error(ErrorCode::invalid_query, "semantic query must be non-empty");
    }
    if (limit == 0) {
        return {};
    }
    EmbeddingVector query_vector = embedder.embed(query);

    std::vector<RetrievalHit> hits;
    hits.reserve(pages_.size());
    for (std::size_t i = 0; i < pages_.size(); ++i) {
        hits.push_back({i, cosine(query_vector, vectors_[i]), Tool::semantic});
    }
    sort_hits(hits);
    if (hits.size() > limit) {
        hits.resize(limit);
    }
    return hits;
}

FetchResult MemoryStore::fetch_pages(const std::vector<long long>& indices) const {
    FetchResult result;
    for (long long index : indices) {
        if (index < 0 || index >= static_cast<long long>(pages_.size())) {
            result.skipped.push_back(index);
            continue;
        }
        result.pages.push_back(pages_[static_cast<std::size_t>(index)]);
    }
    return result;
}

nlohmann::json MemoryStore::to_json() const {
    nlohmann::json pages = nlohmann::json::array();
    nlohmann::json vectors = nlohmann::json::array();
    for (const Page& page : pages_) {
        pages.push_back({{"page_id", page.page_id},
                         {"source_id", page.source_id},
                         {"session_label", page.session_label},
                         {"text", page.text},
                         {"token_count", page.token_count}});
    }
    for (const EmbeddingVector& v : vectors_) {
        vectors.push_back(v);
    }
    return {{"format_version", 1},
            {"embedder_id", embedder_id_},
            {"dimension", dimension_},
            {"pages", pages},
            {"vectors", vectors}};
}

MemoryStore MemoryStore::from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || doc.value("format_version", 0) != 1) {
        throw Error(ErrorCode::load_error, "unsupported store format");
    }
    MemoryStore store;
    store.embedder_id_ = doc.value("embedder_id", std::string{});
    store.dimension_ = doc.value("dimension", std::size_t{0});
    const auto& pages = doc.at("pages");
    const auto& vectors = doc.at("vectors");
    if (pages.size() != vectors.size()) {
        throw Error(ErrorCode::load_error, "store pages and vectors differ in length");
    }
    for (std::size_t i = 0; i < pages.size(); ++i) {
        const auto& p = pages[i];
        Page page;
        page.page_id = p.at("page_id").get<std::size_t>();
        if (page.page_id != i) {
            throw Error(ErrorCode::load_error,
                        "page ids must be contiguous from 0; got " + std::to_string(page.page_id) +
                            " at position " + std::to_string(i));
        }
        page.source_id = p.value("source_id", std::string{});
        page.session_label = p.value("session_label", std::string{});
        page.text = p.at("text").get<std::string>();
        page.token_count = p.at("token_count").get<std::size_t>();
        store.pages_.push_back(std::move(page));
        store.vectors_.push_back(vectors[i].get<EmbeddingVector>());
    }
    if (store.pages_.empty()) {
        throw Error(ErrorCode::corpus_empty, "store snapshot holds no pages");
    }
    store.build_keyword_index();
    return store;
}

void MemoryStore::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::load_error, "cannot open " + path.string() + " for writing");
    }
    out << to_json().dump() << "\n";
}

MemoryStore MemoryStore::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::load_error, "cannot open store file " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::load_error, "store file " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

std::vector<RawPage> parse_corpus_records(const nlohmann::json& doc) {
    if (!doc.is_array()) {
        throw Error(ErrorCode::load_error, "corpus must be a JSON array of records");
    }
    std::vector<RawPage> pages;
    pages.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& record = doc[i];
        if (!record.is_object() || !record.contains("text")) {
            throw Error(ErrorCode::load_error,
                        "corpus record " + std::to_string(i) + " is missing \"text\"");
        }
        RawPage page;
        page.source_id = record.value("source_id", std::string{});
        page.session_label = record.value("session_label", std::string{});
        page.text = record.at("text").get<std::string>();
        pages.push_back(std::move(page));
    }
    return pages;
}

std::vector<RawPage> load_corpus_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::load_error, "cannot open corpus file " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::load_error, "corpus file " + path.string() + ": " + e.what());
    }
    return parse_corpus_records(doc);
}

}  // namespace memsearch
