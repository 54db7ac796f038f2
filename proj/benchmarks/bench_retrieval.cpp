#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "memsearch/embedding.hpp"
#include "memsearch/expbank.hpp"
#include "memsearch/memstore.hpp"

namespace {

std::string random_sentence(std::mt19937_64& rng, std::size_t words) {
    static const std::vector<std::string> vocabulary = {
        "store",  "opened", "march",  "gina",   "race",    "friends", "city",  "moved",
        "party",  "studio", "garden", "length", "charity", "concert", "hiking", "recipe",
        "camera", "summer", "winter", "ticket", "museum",  "coffee",  "letter", "island"};
    std::uniform_int_distribution<std::size_t> pick(0, vocabulary.size() - 1);
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i > 0) out += " ";
        out += vocabulary[pick(rng)];
    }
    return out;
}

memsearch::MemoryStore make_store(std::size_t pages) {
    std::mt19937_64 rng(7);
    std::vector<memsearch::RawPage> raw;
    raw.reserve(pages);
    for (std::size_t i = 0; i < pages; ++i) {
        raw.push_back({"conv", "", random_sentence(rng, 24)});
    }
    memsearch::HashEmbedder embedder;
    return memsearch::MemoryStore::build(raw, embedder);
}

void BM_KeywordSearch(benchmark::State& state) {
    auto store = make_store(static_cast<std::size_t>(state.range(0)));
    std::vector<std::string> keywords = {"gina", "store", "march"};
    for (auto _ : state) {
        benchmark::DoNotOptimize(store.search_keyword(keywords, 5));
    }
}
BENCHMARK(BM_KeywordSearch)->Arg(100)->Arg(1000)->Arg(10000);

void BM_SemanticSearch(benchmark::State& state) {
    auto store = make_store(static_cast<std::size_t>(state.range(0)));
    memsearch::HashEmbedder embedder;
    for (auto _ : state) {
        benchmark::DoNotOptimize(store.search_semantic("when did gina open the store", embedder, 5));
    }
}
BENCHMARK(BM_SemanticSearch)->Arg(100)->Arg(1000)->Arg(10000);

void BM_HashEmbed(benchmark::State& state) {
    memsearch::HashEmbedder embedder;
    std::mt19937_64 rng(11);
    std::string text = random_sentence(rng, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(embedder.embed(text));
    }
}
BENCHMARK(BM_HashEmbed)->Arg(16)->Arg(128)->Arg(512);

void BM_BankTopK(benchmark::State& state) {
    memsearch::HashEmbedder embedder;
    memsearch::ExperienceBank bank(memsearch::StepModule::planning, embedder.id(),
                                   embedder.dimension());
    std::mt19937_64 rng(13);
    for (long long i = 0; i < state.range(0); ++i) {
        memsearch::BankEntry entry;
        entry.condition = random_sentence(rng, 10);
        entry.situation = random_sentence(rng, 8);
        entry.experience_text = "IF x THEN y";
        entry.kind = memsearch::StepModule::planning;
        entry.source = {"bench", static_cast<std::size_t>(i), memsearch::StepModule::planning, 11};
        bank.insert(std::move(entry), embedder);
    }
    memsearch::RetrievalConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(bank.retrieve_topk("duration of a group affiliation",
                                                    "time related query", embedder, cfg));
    }
}
BENCHMARK(BM_BankTopK)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
