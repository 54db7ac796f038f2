#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "memsearch/errors.hpp"
#include "memsearch/expbank.hpp"

#include "helpers.hpp"

using namespace memsearch;

namespace {

BankEntry entry_for(StepModule kind, const std::string& trajectory_id, std::size_t step,
                    const std::string& condition, const std::string& situation,
                    const std::string& experience,
                    QualityLabel quality = QualityLabel::good) {
    BankEntry entry;
    entry.condition = condition;
    entry.situation = situation;
    entry.experience_text = experience;
    entry.kind = kind;
    entry.quality = quality;
    entry.source = {trajectory_id, step, kind, 11};
    return entry;
}

ExperienceBank random_bank(std::mt19937_64& rng, const Embedder& embedder, std::size_t entries,
                           StepModule kind = StepModule::planning) {
    ExperienceBank bank(kind, embedder.id(), embedder.dimension());
    for (std::size_t i = 0; i < entries; ++i) {
        bank.insert(entry_for(kind, "t" + std::to_string(i), i,
                              test_helpers::random_sentence(rng, 2, 10),
                              test_helpers::random_sentence(rng, 2, 8), "IF a THEN b"),
                    embedder);
    }
    return bank;
}

}  // namespace

TEST_CASE("build_condition uses the query for planning and question + memory for reflection") {
    std::string query = "When did Gina open her online clothing store?";
    CHECK(build_condition(StepModule::planning, "ignored", query, "ignored") == query);

    std::string question = "When did Melanie run a charity race?";
    std::string memory = "Melanie ran a charity race for mental health last Saturday.";
    std::string condition = build_condition(StepModule::reflection, question, "q", memory);
    CHECK(condition.find(question) != std::string::npos);
    CHECK(condition.find(memory) != std::string::npos);

    CHECK(build_condition(StepModule::reflection, question, "q", "") == question + "\n");
}

TEST_CASE("abstract_situation returns the scripted abstraction and rejects empties") {
    ScriptedProvider provider;
    provider.push(Role::situation, "Time-related query asking for the duration of an affiliation.");
    provider.push(Role::situation, "   ");
    Gateway gateway(provider);
    SituationAbstractor abstractor(gateway);

    Usage usage;
    std::string situation =
        abstractor.abstract("How long has Caroline had her current group of friends for?", &usage);
    CHECK(situation.rfind("Time-related query", 0) == 0);
    CHECK(usage.total() > 0);

    try {
        abstractor.abstract("another condition");
        FAIL("expected abstraction failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::abstraction_failed);
    }
}

TEST_CASE("abstraction is deterministic under replay") {
    for (int round = 0; round < 2; ++round) {
        ScriptedProvider provider;
        provider.push(Role::situation, "A temporal lookup over history.");
        Gateway gateway(provider);
        SituationAbstractor abstractor(gateway);
        CHECK(abstractor.abstract("condition text") == "A temporal lookup over history.");
    }
}

TEST_CASE("insert computes the key, dedups by source and checks the kind") {
    HashEmbedder embedder;
    ExperienceBank bank(StepModule::planning, embedder.id(), embedder.dimension());
    bank.insert(entry_for(StepModule::planning, "t1", 0, "cond", "situ", "IF a THEN b"), embedder);
    REQUIRE(bank.size() == 1);
    const BankEntry* stored = bank.find("t1:0:P");
    REQUIRE(stored != nullptr);
    CHECK(stored->key_text == "condsitu");  // exactly condition + situation
    CHECK(stored->key_embedding == embedder.embed("condsitu"));

    // same source replaces in place
    bank.insert(entry_for(StepModule::planning, "t1", 0, "cond", "situ", "IF a THEN c"), embedder);
    CHECK(bank.size() == 1);
    CHECK(bank.find("t1:0:P")->experience_text == "IF a THEN c");

    try {
        bank.insert(entry_for(StepModule::reflection, "t2", 0, "c", "s", "IF x THEN y"), embedder);
        FAIL("expected invalid insert");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_insert);
    }
    CHECK(bank.size() == 1);  // banks never share kinds
}

TEST_CASE("retrieve_topk basics") {
    HashEmbedder embedder;
    ExperienceBank bank(StepModule::planning, embedder.id(), embedder.dimension());
    RetrievalConfig cfg;

    CHECK(bank.retrieve_topk("c", "s", embedder, cfg).empty());

    bank.insert(entry_for(StepModule::planning, "t1", 0, "exact condition ", "match me",
                          "IF a THEN b"),
                embedder);
    for (double exp_weight : {1.0, 2.0, 3.0, 4.0, 5.0}) {
        RetrievalConfig swept{3, exp_weight};
        auto scored = bank.retrieve_topk("exact condition ", "match me", embedder, swept);
        REQUIRE(scored.size() == 1);
        CHECK(scored[0].similarity == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(scored[0].weighted_score == doctest::Approx(1.0).epsilon(1e-9));  // 1^p = 1
    }
}

TEST_CASE("retrieve_topk matches a brute-force oracle on a 50-entry bank") {
    HashEmbedder embedder;
    std::mt19937_64 rng(555);
    ExperienceBank bank = random_bank(rng, embedder, 50);

    std::string condition = test_helpers::random_sentence(rng, 3, 8);
    std::string situation = test_helpers::random_sentence(rng, 3, 8);

    // oracle: hand-rolled cosine over every entry, full sort, prefix
    EmbeddingVector query = embedder.embed(condition + situation);
    std::vector<std::pair<double, std::string>> oracle;
    for (const BankEntry& entry : bank.entries()) {
        const EmbeddingVector& key = entry.key_embedding;
        double dot = 0.0;
        double nq = 0.0;
        double nk = 0.0;
        for (std::size_t d = 0; d < key.size(); ++d) {
            dot += query[d] * key[d];
            nq += query[d] * query[d];
            nk += key[d] * key[d];
        }
        double sim = (nq == 0.0 || nk == 0.0) ? 0.0 : dot / (std::sqrt(nq) * std::sqrt(nk));
        oracle.emplace_back(sim, entry.entry_id);
    }
    std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    for (std::size_t k : {1, 3, 5, 10, 50}) {
        auto scored = bank.retrieve_topk(condition, situation, embedder, {k, 3.0});
        REQUIRE(scored.size() == std::min<std::size_t>(k, 50));
        for (std::size_t i = 0; i < scored.size(); ++i) {
            CHECK(scored[i].entry.entry_id == oracle[i].second);
            CHECK(scored[i].similarity == doctest::Approx(oracle[i].first).epsilon(1e-9));
            CHECK(scored[i].weighted_score ==
                  doctest::Approx(std::pow(std::max(oracle[i].first, 0.0), 3.0)).epsilon(1e-9));
        }
    }
}

TEST_CASE("deterministic selection is invariant to the exponent, only scores change") {
    HashEmbedder embedder;
    std::mt19937_64 rng(777);
    ExperienceBank bank = random_bank(rng, embedder, 40);
    std::string condition = test_helpers::random_sentence(rng, 3, 8);
    std::string situation = test_helpers::random_sentence(rng, 2, 6);

    auto baseline = bank.retrieve_topk(condition, situation, embedder, {5, 1.0});
    for (double exp_weight : {2.0, 3.0, 4.0, 5.0}) {
        auto swept = bank.retrieve_topk(condition, situation, embedder, {5, exp_weight});
        REQUIRE(swept.size() == baseline.size());
        for (std::size_t i = 0; i < swept.size(); ++i) {
            CHECK(swept[i].entry.entry_id == baseline[i].entry.entry_id);
            CHECK(swept[i].weighted_score ==
                  doctest::Approx(std::pow(std::max(swept[i].similarity, 0.0), exp_weight))
                      .epsilon(1e-9));
        }
    }
}

TEST_CASE("weighted sampling is seeded, without replacement, and honors k") {
    HashEmbedder embedder;
    std::mt19937_64 rng(888);
    ExperienceBank bank = random_bank(rng, embedder, 30);
    std::string condition = test_helpers::random_sentence(rng, 3, 8);
    std::string situation = test_helpers::random_sentence(rng, 2, 6);
    RetrievalConfig cfg{5, 3.0};

    auto first = bank.retrieve_topk(condition, situation, embedder, cfg, true, 42);
    auto second = bank.retrieve_topk(condition, situation, embedder, cfg, true, 42);
    REQUIRE(first.size() == 5);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].entry.entry_id == second[i].entry.entry_id);  // same seed, same draw
        seen.insert(first[i].entry.entry_id);
    }
    CHECK(seen.size() == 5);  // without replacement
}

TEST_CASE("bank files roundtrip byte-identically") {
    HashEmbedder embedder;
    std::mt19937_64 rng(1001);
    ExperienceBank bank = random_bank(rng, embedder, 10, StepModule::reflection);

    auto dir = test_helpers::temp_dir("bank");
    bank.save(dir / "bank.jsonl");
    ExperienceBank reloaded = ExperienceBank::load(dir / "bank.jsonl");
    CHECK(reloaded.size() == bank.size());
    CHECK(reloaded.kind() == StepModule::reflection);

    reloaded.save(dir / "bank2.jsonl");
    CHECK(test_helpers::read_file(dir / "bank.jsonl") ==
          test_helpers::read_file(dir / "bank2.jsonl"));

    // empty bank roundtrip
    ExperienceBank empty(StepModule::planning, embedder.id(), embedder.dimension());
    empty.save(dir / "empty.jsonl");
    CHECK(ExperienceBank::load(dir / "empty.jsonl").empty());
    std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt bank files fail with the line number") {
    HashEmbedder embedder;
    std::mt19937_64 rng(1002);
    ExperienceBank bank = random_bank(rng, embedder, 3);
    auto dir = test_helpers::temp_dir("bankcorrupt");
    bank.save(dir / "bank.jsonl");

    // truncate the last line
    std::string content = test_helpers::read_file(dir / "bank.jsonl");
    std::ofstream out(dir / "truncated.jsonl", std::ios::binary);
    out << content.substr(0, content.size() - 30);
    out.close();
    try {
        ExperienceBank::load(dir / "truncated.jsonl");
        FAIL("expected load error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::load_error);
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }

    // version bump in the header
    std::ofstream bad(dir / "badversion.jsonl", std::ios::binary);
    bad << R"({"dimension":256,"embedder_id":"hash-256","format_version":99,"kind":"P"})" << "\n";
    bad.close();
    try {
        ExperienceBank::load(dir / "badversion.jsonl");
        FAIL("expected load error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("render_experience tags the quality") {
    BankEntry good = entry_for(StepModule::planning, "t", 0, "c", "s", "IF a THEN b");
    CHECK(render_experience(good) == "[from a successful step] IF a THEN b");
    BankEntry bad = entry_for(StepModule::planning, "t", 1, "c", "s", "IF a THEN b",
                              QualityLabel::bad);
    CHECK(render_experience(bad) == "[from a failed step] IF a THEN b");
}
