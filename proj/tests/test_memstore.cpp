#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "memsearch/embedding.hpp"
#include "memsearch/errors.hpp"
#include "memsearch/memstore.hpp"
#include "memsearch/text.hpp"

#include "helpers.hpp"

using namespace memsearch;

namespace {

MemoryStore toy_store(const std::vector<std::string>& texts, const Embedder& embedder) {
    std::vector<RawPage> pages;
    for (const std::string& text : texts) {
        pages.push_back({"src", "", text});
    }
    return MemoryStore::build(pages, embedder);
}

}  // namespace

TEST_CASE("build assigns contiguous ids and fills both indexes") {
    HashEmbedder embedder;
    MemoryStore store = toy_store({"alpha beta", "gamma", "delta epsilon"}, embedder);
    REQUIRE(store.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(store.page(i).page_id == i);
        CHECK(store.vector(i).size() == 256);
    }
    CHECK(store.page(0).token_count == 2);
}

TEST_CASE("duplicate texts are distinct pages") {
    HashEmbedder embedder;
    MemoryStore store = toy_store({"a", "a"}, embedder);
    CHECK(store.size() == 2);
    CHECK(store.page(0).text == store.page(1).text);
    CHECK(store.page(0).page_id != store.page(1).page_id);
}

TEST_CASE("build indexes the expected terms") {
    HashEmbedder embedder;
    MemoryStore store = toy_store({"Gina opened her online clothing store on 16 March 2023."},
                                  embedder);
    CHECK(store.page(0).token_count == 10);
    CHECK_FALSE(store.search_keyword({"gina"}, 10).empty());
    CHECK_FALSE(store.search_keyword({"march"}, 10).empty());
    CHECK(store.search_keyword({"boutique"}, 10).empty());
}

TEST_CASE("empty corpus and empty page are rejected") {
    HashEmbedder embedder;
    std::vector<RawPage> none;
    CHECK_THROWS_WITH_AS(static_cast<void>(MemoryStore::build(none, embedder)),
                         doctest::Contains("empty corpus"), Error);
    std::vector<RawPage> blank = {{"src", "", ""}};
    CHECK_THROWS_AS(static_cast<void>(MemoryStore::build(blank, embedder)), Error);
}

TEST_CASE("keyword search ranks the both-terms page first with frozen BM25 scores") {
    HashEmbedder embedder;
    // two pages: one holds both query terms, one holds a single term
    MemoryStore store = toy_store({"apple banana", "apple"}, embedder);
    auto hits = store.search_keyword({"apple", "banana"}, 10);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].page_id == 0);
    CHECK(hits[1].page_id == 1);
    // hand-computed: k1=1.2, b=0.75, idf = ln((N - df + 0.5)/(df + 0.5) + 1)
    // page0: tfnorm = 2.2/2.5, score = 0.88 * (ln 1.2 + ln 2)
    // page1: tfnorm = 2.2/1.9, score = (2.2/1.9) * ln 1.2
    CHECK(hits[0].score == doctest::Approx(0.7704124888714319).epsilon(1e-12));
    CHECK(hits[1].score == doctest::Approx(0.21110917102457902).epsilon(1e-12));
    CHECK(hits[0].tool == Tool::keyword);
}

TEST_CASE("keyword search over the conversation corpus") {
    HashEmbedder embedder;
    MemoryStore store = test_helpers::gina_store(embedder);
    auto hits = store.search_keyword({"gina", "store"}, 10);
    REQUIRE_FALSE(hits.empty());
    bool found_store_page = false;
    for (const auto& hit : hits) {
        if (store.page(hit.page_id).text.find("online clothing store") != std::string::npos) {
            found_store_page = true;
        }
    }
    CHECK(found_store_page);

    CHECK(store.search_keyword({"zzzunseen"}, 10).empty());
    CHECK_THROWS_AS(store.search_keyword({"!!!", "  "}, 10), Error);
}

TEST_CASE("semantic search self-similarity and limits") {
    HashEmbedder embedder;
    MemoryStore store = test_helpers::gina_store(embedder);
    const std::string& text = store.page(4).text;
    auto hits = store.search_semantic(text, embedder, 3);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].page_id == 4);
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(store.search_semantic(text, embedder, 0).empty());
    CHECK_THROWS_AS(store.search_semantic("", embedder, 3), Error);
}

TEST_CASE("semantic search equals an independent brute-force cosine sort") {
    HashEmbedder embedder;
    std::mt19937_64 rng(616);
    for (int trial = 0; trial < 25; ++trial) {
        std::uniform_int_distribution<std::size_t> page_count(1, 12);
        std::vector<std::string> texts;
        std::size_t n = page_count(rng);
        for (std::size_t i = 0; i < n; ++i) {
            texts.push_back(test_helpers::random_sentence(rng, 1, 12));
        }
        MemoryStore store = toy_store(texts, embedder);
        std::string query = test_helpers::random_sentence(rng, 1, 6);

        // oracle: re-embed, hand-rolled dot product, stable sort
        EmbeddingVector qv = embedder.embed(query);
        std::vector<std::pair<double, std::size_t>> oracle;
        for (std::size_t i = 0; i < texts.size(); ++i) {
            EmbeddingVector pv = embedder.embed(texts[i]);
            double dot = 0.0;
            for (std::size_t d = 0; d < pv.size(); ++d) {
                dot += qv[d] * pv[d];
            }
            double nq = l2_norm(qv);
            double np = l2_norm(pv);
            double sim = (nq == 0.0 || np == 0.0) ? 0.0 : dot / (nq * np);
            oracle.emplace_back(sim, i);
        }
        std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });

        auto hits = store.search_semantic(query, embedder, texts.size() + 5);
        REQUIRE(hits.size() == texts.size());  // permutation of all pages
        for (std::size_t i = 0; i < hits.size(); ++i) {
            CHECK(hits[i].page_id == oracle[i].second);
            CHECK(hits[i].score == doctest::Approx(oracle[i].first).epsilon(1e-9));
        }
    }
}

TEST_CASE("hits are sorted by score desc then page id asc for every tool") {
    HashEmbedder embedder;
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::string> texts;
        std::uniform_int_distribution<std::size_t> page_count(2, 15);
        std::size_t n = page_count(rng);
        for (std::size_t i = 0; i < n; ++i) {
            texts.push_back(test_helpers::random_sentence(rng, 1, 8));
        }
        MemoryStore store = toy_store(texts, embedder);
        auto check_sorted = [](const std::vector<RetrievalHit>& hits) {
            for (std::size_t i = 1; i < hits.size(); ++i) {
                bool ordered = hits[i - 1].score > hits[i].score ||
                               (hits[i - 1].score == hits[i].score &&
                                hits[i - 1].page_id < hits[i].page_id);
                CHECK(ordered);
            }
        };
        check_sorted(store.search_semantic("anything goes", embedder, n));
        auto first_tokens = tokenize(texts[0]);
        check_sorted(store.search_keyword({first_tokens[0]}, n));
    }
}

TEST_CASE("fetch_pages returns requested order and reports skips") {
    HashEmbedder embedder;
    MemoryStore store = test_helpers::gina_store(embedder);

    auto result = store.fetch_pages({5, 9});
    REQUIRE(result.pages.size() == 2);
    CHECK(result.pages[0].page_id == 5);
    CHECK(result.pages[1].page_id == 9);
    CHECK(result.skipped.empty());

    CHECK(store.fetch_pages({}).pages.empty());

    auto clamped = store.fetch_pages({0, 99, -3});
    REQUIRE(clamped.pages.size() == 1);
    CHECK(clamped.pages[0].page_id == 0);
    CHECK(clamped.skipped == std::vector<long long>{99, -3});
}

TEST_CASE("store snapshot roundtrips and searches do not mutate it") {
    HashEmbedder embedder;
    MemoryStore store = test_helpers::gina_store(embedder);
    std::string before = store.to_json().dump();

    store.search_keyword({"gina"}, 5);
    store.search_semantic("clothing store", embedder, 5);
    store.fetch_pages({0, 1, 2});
    CHECK(store.to_json().dump() == before);

    auto dir = test_helpers::temp_dir("store");
    store.save(dir / "store.json");
    MemoryStore reloaded = MemoryStore::load(dir / "store.json");
    CHECK(reloaded.to_json().dump() == before);
    CHECK(reloaded.size() == store.size());

    auto hits = reloaded.search_keyword({"gina", "store"}, 10);
    CHECK_FALSE(hits.empty());
    std::filesystem::remove_all(dir);
}

TEST_CASE("corpus records parser validates shape") {
    CHECK_THROWS_AS(parse_corpus_records(nlohmann::json::object()), Error);
    nlohmann::json missing_text = nlohmann::json::array({{{"source_id", "s"}}});
    CHECK_THROWS_AS(parse_corpus_records(missing_text), Error);
}

namespace {

// fails on the nth embed call
class FailingEmbedder final : public Embedder {
public:
    explicit FailingEmbedder(std::size_t fail_at) : fail_at_(fail_at) {}

    EmbeddingVector embed(const std::string& text) const override {
        if (++calls_ == fail_at_) {
            throw Error(ErrorCode::provider_error, "embedding service unavailable");
        }
        return HashEmbedder(8).embed(text);
    }
    std::size_t dimension() const override { return 8; }
    std::string id() const override { return "hash-8"; }

private:
    std::size_t fail_at_;
    mutable std::size_t calls_ = 0;
};

}  // namespace

TEST_CASE("embedding failures during build carry the page id") {
    FailingEmbedder embedder(2);
    std::vector<RawPage> pages = {{"s", "", "first page"}, {"s", "", "second page"}};
    try {
        MemoryStore::build(pages, embedder);
        FAIL("expected provider error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::provider_error);
        CHECK(std::string(e.what()).find("page 1") != std::string::npos);
    }
}

TEST_CASE("corrupt store snapshots fail to load") {
    auto dir = test_helpers::temp_dir("badstore");
    std::ofstream(dir / "garbage.json") << "{not json";
    CHECK_THROWS_AS(MemoryStore::load(dir / "garbage.json"), Error);

    std::ofstream(dir / "badversion.json") << R"({"format_version": 9, "pages": [], "vectors": []})";
    try {
        MemoryStore::load(dir / "badversion.json");
        FAIL("expected load error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::load_error);
    }
    CHECK_THROWS_AS(MemoryStore::load(dir / "missing.json"), Error);
    std::filesystem::remove_all(dir);
}
