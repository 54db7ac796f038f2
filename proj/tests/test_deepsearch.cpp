#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "memsearch/deepsearch.hpp"
#include "memsearch/errors.hpp"
#include "memsearch/prompts.hpp"

#include "helpers.hpp"

using namespace memsearch;

namespace {

const std::string kGinaQuestion = "When did Gina open her online clothing store?";

struct Rig {
    HashEmbedder embedder;
    MemoryStore store;
    ScriptedProvider provider;
    CallLog log;
    Gateway gateway;
    DeepSearchEngine engine;

    explicit Rig(const std::string& fixture)
        : store(test_helpers::gina_store(embedder)),
          provider(test_helpers::fixture_provider(fixture)),
          gateway(provider, &log),
          engine(gateway, store, embedder) {}
};

Banks empty_banks(const Embedder& embedder) {
    return Banks{ExperienceBank(StepModule::planning, embedder.id(), embedder.dimension()),
                 ExperienceBank(StepModule::reflection, embedder.id(), embedder.dimension())};
}

}  // namespace

TEST_CASE("planner reply maps onto a validated plan") {
    Rig rig("gina_replies.json");
    Plan plan = rig.engine.plan(kGinaQuestion, {"", 0}, {});
    CHECK(plan.tools == std::set<Tool>{Tool::keyword, Tool::semantic, Tool::page});
    CHECK(plan.page_indices == std::vector<long long>{5, 9});
    CHECK(plan.keyword_queries.size() == 2);
    CHECK(plan.info_needs.size() == 1);
}

TEST_CASE("empty experience list leaves the prompt byte-identical to the baseline") {
    std::string with_empty = prompts::planner_user("q", "memory", {});
    std::string baseline = prompts::planner_user("q", "memory", std::vector<std::string>{});
    CHECK(with_empty == baseline);
    CHECK(with_empty.find("PRIOR EXPERIENCE") == std::string::npos);

    std::string injected = prompts::planner_user("q", "memory", {"IF a THEN b"});
    CHECK(injected.find("PRIOR EXPERIENCE:\n- IF a THEN b\n") != std::string::npos);

    CHECK(prompts::reflector_user("q", "m", {}).find("PRIOR EXPERIENCE") == std::string::npos);
}

TEST_CASE("keyword-only scripted plan leaves other tools empty") {
    ScriptedProvider provider;
    provider.push(Role::planner,
                  R"({"info_needs": ["n"], "tools": ["keyword"], "keyword_queries": ["a", "b"]})");
    HashEmbedder embedder;
    MemoryStore store = test_helpers::gina_store(embedder);
    Gateway gateway(provider);
    DeepSearchEngine engine(gateway, store, embedder);
    Plan plan = engine.plan("q", {"", 0}, {});
    CHECK(plan.tools == std::set<Tool>{Tool::keyword});
    CHECK(plan.vector_queries.empty());
    CHECK(plan.page_indices.empty());
}

TEST_CASE("plan invariants are enforced") {
    HashEmbedder embedder;
    MemoryStore store = test_helpers::gina_store(embedder);

    auto expect_planning_failure = [&](const std::string& reply) {
        ScriptedProvider provider;
        provider.push(Role::planner, reply);
        // a JSON-parse repair would consume a second reply; schema violations fail at once
        Gateway gateway(provider);
        DeepSearchEngine engine(gateway, store, embedder);
        try {
            engine.plan("q", {"", 0}, {});
            FAIL("expected planning failure for: " << reply);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::planning_failed);
        }
    };
    expect_planning_failure(R"({"info_needs": [], "tools": []})");
    expect_planning_failure(R"({"tools": ["keyword"]})");                         // no queries
    expect_planning_failure(R"({"tools": ["semantic"], "vector_queries": []})");  // empty queries
    expect_planning_failure(
        R"({"tools": ["keyword"], "keyword_queries": ["x"], "page_indices": [1]})");
    expect_planning_failure(R"({"tools": ["grep"], "keyword_queries": ["x"]})");
}

TEST_CASE("malformed planner JSON gets exactly one repair re-ask") {
    HashEmbedder embedder;
    MemoryStore store = test_helpers::gina_store(embedder);

    // repair succeeds
    {
        ScriptedProvider provider;
        provider.push(Role::planner, "{broken");
        provider.push(Role::planner, R"({"tools": ["keyword"], "keyword_queries": ["x"]})");
        CallLog log;
        Gateway gateway(provider, &log);
        DeepSearchEngine engine(gateway, store, embedder);
        Plan plan = engine.plan("q", {"", 0}, {});
        CHECK(plan.tools == std::set<Tool>{Tool::keyword});
        REQUIRE(log.size() == 2);
        CHECK(log.records()[1].user_prompt.find("could not be parsed") != std::string::npos);
    }
    // second failure is fatal
    {
        ScriptedProvider provider;
        provider.push(Role::planner, "{broken");
        provider.push(Role::planner, "still broken");
        Gateway gateway(provider);
        DeepSearchEngine engine(gateway, store, embedder);
        CHECK_THROWS_AS(engine.plan("q", {"", 0}, {}), Error);
    }
}

TEST_CASE("execute_search honors page plans and dedups by max score") {
    Rig rig("gina_replies.json");

    Plan page_only;
    page_only.tools = {Tool::page};
    page_only.page_indices = {5, 9};
    auto hits = rig.engine.execute_search(page_only, {});
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].page_id == 5);
    CHECK(hits[1].page_id == 9);
    CHECK(hits[0].tool == Tool::page);
    CHECK(hits[0].score == 1.0);
}

TEST_CASE("hand-merged hit lists keep the maximum score per page") {
    // keyword {1: 0.4} vs semantic {1: 0.9, 3: 0.2} merges to [(1, 0.9), (3, 0.2)]
    std::vector<RetrievalHit> merged = {{1, 0.4, Tool::keyword},
                                        {1, 0.9, Tool::semantic},
                                        {3, 0.2, Tool::semantic}};
    std::unordered_map<std::size_t, RetrievalHit> best;
    for (const auto& hit : merged) {
        auto it = best.find(hit.page_id);
        if (it == best.end() || hit.score > it->second.score) {
            best[hit.page_id] = hit;
        }
    }
    std::vector<RetrievalHit> out;
    for (const auto& [_, hit] : best) out.push_back(hit);
    sort_hits(out);
    REQUIRE(out.size() == 2);
    CHECK(out[0].page_id == 1);
    CHECK(out[0].score == 0.9);
    CHECK(out[0].tool == Tool::semantic);
    CHECK(out[1].page_id == 3);
}

TEST_CASE("execute_search dedups pages found by every tool") {
    HashEmbedder embedder;
    MemoryStore store = test_helpers::gina_store(embedder);
    ScriptedProvider provider;
    Gateway gateway(provider);
    DeepSearchEngine engine(gateway, store, embedder);

    Plan plan;
    plan.tools = {Tool::keyword, Tool::semantic, Tool::page};
    // page 9's own text guarantees all three tools return page 9
    plan.keyword_queries = {"online clothing store opened 16 March 2023"};
    plan.vector_queries = {store.page(9).text};
    plan.page_indices = {9};
    auto hits = engine.execute_search(plan, {5, 5});
    int count = 0;
    for (const auto& hit : hits) {
        if (hit.page_id == 9) ++count;
    }
    CHECK(count == 1);
}

TEST_CASE("integrate condenses evidence and increments the iteration") {
    Rig rig("gina_replies.json");
    TempMemory memory{"", 1};
    TempMemory next = rig.engine.integrate(kGinaQuestion, memory, {});
    CHECK(next.iteration == 2);
    CHECK(next.text.find("between 29 Jan 2023 and 16 Mar 2023") != std::string::npos);
    // empty hits put an explicit marker into the prompt
    CHECK(rig.log.records()[0].user_prompt.find("(no new evidence)") != std::string::npos);
}

TEST_CASE("reflection outcomes parse and enforce the pairing invariant") {
    Rig rig("gina_replies.json");
    ReflectionOutcome first = rig.engine.reflect({"memory", 1}, kGinaQuestion, {});
    CHECK_FALSE(first.enough);
    REQUIRE(first.new_request.has_value());
    CHECK(first.new_request->rfind("What is the exact date", 0) == 0);

    ReflectionOutcome second = rig.engine.reflect({"memory", 2}, kGinaQuestion, {});
    CHECK(second.enough);
    CHECK_FALSE(second.new_request.has_value());
}

TEST_CASE("enough=false without a new_request is a reflection failure") {
    ScriptedProvider provider;
    provider.push(Role::reflector, R"({"enough": false})");
    HashEmbedder embedder;
    MemoryStore store = test_helpers::gina_store(embedder);
    Gateway gateway(provider);
    DeepSearchEngine engine(gateway, store, embedder);
    try {
        engine.reflect({"m", 1}, "q", {});
        FAIL("expected reflection failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::reflection_failed);
    }
}

TEST_CASE("answer passes scripted replies through verbatim") {
    ScriptedProvider provider;
    provider.push(Role::answerer, "unknown");
    HashEmbedder embedder;
    MemoryStore store = test_helpers::gina_store(embedder);
    Gateway gateway(provider);
    DeepSearchEngine engine(gateway, store, embedder);
    CHECK(engine.answer("q", {"", 0}) == "unknown");

    ScriptedProvider empty_provider;
    empty_provider.push(Role::answerer, "   ");
    Gateway empty_gateway(empty_provider);
    DeepSearchEngine empty_engine(empty_gateway, store, embedder);
    try {
        empty_engine.answer("q", {"", 0});
        FAIL("expected answer failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::answer_failed);
    }
}

TEST_CASE("golden scripted run replays the two-step trajectory") {
    Rig rig("gina_replies.json");
    SearchConfig config;
    Trajectory trajectory = rig.engine.run(kGinaQuestion, nullptr, config, "gina");

    REQUIRE(trajectory.steps.size() == 2);
    CHECK(trajectory.terminated_by == Termination::enough);
    CHECK(trajectory.final_memory.text == "Gina opened her online clothing store on 16 March 2023.");
    CHECK(trajectory.answer.find("16 March 2023") != std::string::npos);

    const Step& step0 = trajectory.steps[0];
    CHECK(step0.plan.page_indices == std::vector<long long>{5, 9});
    CHECK_FALSE(step0.reflection.enough);
    CHECK(step0.memory_after.iteration == 1);
    const Step& step1 = trajectory.steps[1];
    CHECK(step1.index == 1);
    CHECK(step1.query == *step0.reflection.new_request);  // q_{i+1} becomes the working query
    CHECK(step1.reflection.enough);

    // answer recorded verbatim
    CHECK(trajectory.answer == "Gina opened her online clothing store on 16 March 2023.");
}

TEST_CASE("reflector that never stops hits the iteration cap") {
    HashEmbedder embedder;
    MemoryStore store = test_helpers::gina_store(embedder);
    ScriptedProvider provider;
    for (int i = 0; i < 3; ++i) {
        provider.push(Role::planner, R"({"tools": ["keyword"], "keyword_queries": ["gina"]})");
        provider.push(Role::integrator, R"({"memory": "still looking"})");
        provider.push(Role::reflector, R"({"enough": false, "new_request": "keep looking"})");
    }
    provider.push(Role::answerer, "no answer found");
    Gateway gateway(provider);
    DeepSearchEngine engine(gateway, store, embedder);
    SearchConfig config;
    config.max_iterations = 3;
    Trajectory trajectory = engine.run("q", nullptr, config, "cap");
    CHECK(trajectory.steps.size() == 3);
    CHECK(trajectory.terminated_by == Termination::iteration_cap);
    CHECK_FALSE(trajectory.steps.back().reflection.enough);
}

TEST_CASE("absent banks and empty banks produce identical trajectories and prompts") {
    Rig absent("gina_replies.json");
    SearchConfig config;
    Trajectory without = absent.engine.run(kGinaQuestion, nullptr, config, "gina");

    Rig empty("gina_replies.json");
    Banks banks = empty_banks(empty.embedder);
    Trajectory with_empty = empty.engine.run(kGinaQuestion, &banks, config, "gina");

    CHECK(trajectory_to_json(without).dump() == trajectory_to_json(with_empty).dump());
    REQUIRE(absent.log.size() == empty.log.size());
    for (std::size_t i = 0; i < absent.log.size(); ++i) {
        CHECK(absent.log.records()[i].system_prompt == empty.log.records()[i].system_prompt);
        CHECK(absent.log.records()[i].user_prompt == empty.log.records()[i].user_prompt);
    }
}

TEST_CASE("termination holds for randomized scripted reflectors") {
    HashEmbedder embedder;
    MemoryStore store = test_helpers::gina_store(embedder);
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 30; ++trial) {
        SearchConfig config;
        config.max_iterations = 1 + static_cast<std::size_t>(rng() % 5);
        ScriptedProvider provider;
        for (std::size_t i = 0; i < config.max_iterations; ++i) {
            provider.push(Role::planner, R"({"tools": ["keyword"], "keyword_queries": ["gina"]})");
            provider.push(Role::integrator, R"({"memory": "m"})");
            bool stop = (rng() % 2) == 0;
            provider.push(Role::reflector,
                          stop ? R"({"enough": true})"
                               : R"({"enough": false, "new_request": "again"})");
        }
        provider.push(Role::answerer, "done");
        Gateway gateway(provider);
        DeepSearchEngine engine(gateway, store, embedder);
        Trajectory trajectory = engine.run("q", nullptr, config, "prop");

        CHECK(trajectory.steps.size() >= 1);
        CHECK(trajectory.steps.size() <= config.max_iterations);
        // step indices contiguous from 0; at most one enough=true, at the end
        std::size_t enough_count = 0;
        for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
            CHECK(trajectory.steps[i].index == i);
            if (trajectory.steps[i].reflection.enough) ++enough_count;
        }
        if (trajectory.terminated_by == Termination::enough) {
            CHECK(enough_count == 1);
            CHECK(trajectory.steps.back().reflection.enough);
        } else {
            CHECK(enough_count == 0);
            CHECK(trajectory.steps.size() == config.max_iterations);
        }
    }
}

TEST_CASE("trajectory usage equals the sum over every model reply of the run") {
    Rig rig("gina_replies.json");
    SearchConfig config;
    Trajectory trajectory = rig.engine.run(kGinaQuestion, nullptr, config, "gina");

    Usage expected;
    for (const CallRecord& record : rig.log.records()) {
        expected.prompt_tokens += record.prompt_tokens;
        expected.completion_tokens += record.completion_tokens;
    }
    CHECK(trajectory.usage.prompt_tokens == expected.prompt_tokens);
    CHECK(trajectory.usage.completion_tokens == expected.completion_tokens);
}

TEST_CASE("stage errors carry the step index") {
    HashEmbedder embedder;
    MemoryStore store = test_helpers::gina_store(embedder);
    ScriptedProvider provider;
    provider.push(Role::planner, R"({"tools": ["keyword"], "keyword_queries": ["gina"]})");
    provider.push(Role::integrator, R"({"memory": "m"})");
    provider.push(Role::reflector, R"({"enough": false, "new_request": "next"})");
    // step 1's planner queue is empty -> fixture exhaustion at step 1
    Gateway gateway(provider);
    DeepSearchEngine engine(gateway, store, embedder);
    SearchConfig config;
    try {
        engine.run("q", nullptr, config, "wrap");
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).rfind("step 1:", 0) == 0);
    }
}

TEST_CASE("non-empty banks inject retrieved experiences into the step record") {
    HashEmbedder embedder;
    MemoryStore store = test_helpers::gina_store(embedder);
    ScriptedProvider provider = test_helpers::fixture_provider("efficiency_augmented_replies.json");
    CallLog log;
    Gateway gateway(provider, &log);
    DeepSearchEngine engine(gateway, store, embedder);

    Banks banks{ExperienceBank(StepModule::planning, embedder.id(), embedder.dimension()),
                ExperienceBank(StepModule::reflection, embedder.id(), embedder.dimension())};
    BankEntry planning_exp;
    planning_exp.condition = "When did Melanie run a charity race?";
    planning_exp.situation = "A temporal query for one exact event date.";
    planning_exp.experience_text = "IF the question asks for one exact date THEN query it directly.";
    planning_exp.kind = StepModule::planning;
    planning_exp.source = {"prior", 0, StepModule::planning, 11};
    banks.planning.insert(std::move(planning_exp), embedder);
    BankEntry reflection_exp;
    reflection_exp.condition = "Q plus memory";
    reflection_exp.situation = "Memory already answers the question.";
    reflection_exp.experience_text = "IF the memory states the fact THEN set enough = true.";
    reflection_exp.kind = StepModule::reflection;
    reflection_exp.source = {"prior", 0, StepModule::reflection, 12};
    banks.reflection.insert(std::move(reflection_exp), embedder);

    Trajectory trajectory =
        engine.run("When did Melanie run a charity race?", &banks, SearchConfig{}, "melanie");
    REQUIRE(trajectory.steps.size() == 1);
    CHECK(trajectory.steps[0].injected_planning_exps == std::vector<std::string>{"prior:0:P"});
    CHECK(trajectory.steps[0].injected_reflection_exps == std::vector<std::string>{"prior:0:R"});

    // the planner prompt carries the tagged experience; situation calls precede it
    bool saw_situation = false;
    for (const CallRecord& record : log.records()) {
        if (record.role == Role::situation) {
            saw_situation = true;
        }
        if (record.role == Role::planner) {
            CHECK(saw_situation);
            CHECK(record.user_prompt.find("PRIOR EXPERIENCE:") != std::string::npos);
            CHECK(record.user_prompt.find("[from a successful step] IF the question asks") !=
                  std::string::npos);
        }
    }
}

TEST_CASE("scripted runs are bit-reproducible") {
    auto run_once = []() {
        Rig rig("gina_replies.json");
        Trajectory trajectory = rig.engine.run(kGinaQuestion, nullptr, SearchConfig{}, "gina");
        return trajectory_to_json(trajectory).dump();
    };
    CHECK(run_once() == run_once());
}

TEST_CASE("trajectory JSON roundtrips") {
    Rig rig("gina_replies.json");
    SearchConfig config;
    Trajectory trajectory = rig.engine.run(kGinaQuestion, nullptr, config, "gina");
    auto dir = test_helpers::temp_dir("traj");
    save_trajectory(trajectory, dir / "t.json");
    Trajectory reloaded = load_trajectory(dir / "t.json");
    CHECK(trajectory_to_json(reloaded).dump() == trajectory_to_json(trajectory).dump());
    std::filesystem::remove_all(dir);
}
