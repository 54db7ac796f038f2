#include "memsearch/deepsearch.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include "memsearch/errors.hpp"
#include "memsearch/prompts.hpp"
#include "memsearch/text.hpp"

namespace memsearch {

const char* termination_name(Termination t) {
    return t == Termination::enough ? "enough" : "iteration_cap";
}

DeepSearchEngine::DeepSearchEngine(Gateway& gateway, const MemoryStore& store,
                                   const Embedder& embedder)
    : gateway_(&gateway), store_(&store), embedder_(&embedder) {}

ModelReply DeepSearchEngine::ask(Role role, const std::string& system_prompt,
                                 const std::string& user_prompt) {
    ModelReply reply = gateway_->complete(role, system_prompt, user_prompt);
    run_usage_.add(reply);
    return reply;
}

// One repair re-ask on a JSON parse failure, appending the parse error to
// the prompt; a second failure is fatal for the run.
nlohmann::json DeepSearchEngine::ask_json(Role role, const std::string& system_prompt,
                                          std::string user_prompt) {
    ModelReply reply = ask(role, system_prompt, user_prompt);
    try {
        return gateway_->parse_reply(reply.text);
    } catch (const Error& first) {
        user_prompt += "\n\nYour previous reply could not be parsed (";
        user_prompt += first.what();
        user_prompt += "). Return ONLY the JSON object.";
        ModelReply repaired = ask(role, system_prompt, user_prompt);
        return gateway_->parse_reply(repaired.text);
    }
}

Plan DeepSearchEngine::parse_plan(const nlohmann::json& doc) const {
    if (!doc.is_object()) {
        throw Error(ErrorCode::planning_failed, "plan reply is not a JSON object");
    }
    Plan plan;
    for (const auto& need : doc.value("info_needs", nlohmann::json::array())) {
        plan.info_needs.push_back(need.get<std::string>());
    }
    if (!doc.contains("tools") || !doc["tools"].is_array() || doc["tools"].empty()) {
        throw Error(ErrorCode::planning_failed, "plan must select at least one tool");
    }
    for (const auto& name : doc["tools"]) {
        try {
            plan.tools.insert(tool_from_name(name.get<std::string>()));
        } catch (const Error& e) {
            throw Error(ErrorCode::planning_failed, e.what());
        }
    }
    for (const auto& q : doc.value("keyword_queries", nlohmann::json::array())) {
        plan.keyword_queries.push_back(q.get<std::string>());
    }
    for (const auto& q : doc.value("vector_queries", nlohmann::json::array())) {
        plan.vector_queries.push_back(q.get<std::string>());
    }
    for (const auto& index : doc.value("page_indices", nlohmann::json::array())) {
        plan.page_indices.push_back(index.get<long long>());
    }

    // every selected tool needs queries; no queries for unselected tools
    auto check = [&](Tool tool, bool has_queries, const char* field) {
        bool selected = plan.tools.count(tool) > 0;
        if (selected && !has_queries) {
            throw Error(ErrorCode::planning_failed,
                        std::string("plan selects ") + tool_name(tool) + " but provides no " +
                            field);
        }
        if (!selected && has_queries) {
            throw Error(ErrorCode::planning_failed,
                        std::string("plan provides ") + field + " without selecting " +
                            tool_name(tool));
        }
    };
    check(Tool::keyword, !plan.keyword_queries.empty(), "keyword_queries");
    check(Tool::semantic, !plan.vector_queries.empty(), "vector_queries");
    check(Tool::page, !plan.page_indices.empty(), "page_indices");
    return plan;
}

Plan DeepSearchEngine::plan(const std::string& query, const TempMemory& memory,
                            const std::vector<std::string>& experiences) {
    if (query.empty()) {
        throw Error(ErrorCode::invalid_argument, "query must be non-empty");
    }
    nlohmann::json doc = ask_json(Role::planner, prompts::planner_system(),
                                  prompts::planner_user(query, memory.text, experiences));
    return parse_plan(doc);
}

std::vector<RetrievalHit> DeepSearchEngine::execute_search(const Plan& plan,
                                                           const ToolLimits& limits) const {
    std::vector<RetrievalHit> all;

    if (plan.tools.count(Tool::keyword) > 0) {
        try {
            auto hits = store_->search_keyword(plan.keyword_queries, limits.keyword);
            all.insert(all.end(), hits.begin(), hits.end());
        } catch (const Error& e) {
            throw Error(e.code(), std::string("keyword: ") + e.what());
        }
    }
    if (plan.tools.count(Tool::semantic) > 0) {
        for (const std::string& query : plan.vector_queries) {
            try {
                auto hits = store_->search_semantic(query, *embedder_, limits.semantic);
                all.insert(all.end(), hits.begin(), hits.end());
            } catch (const Error& e) {
                throw Error(e.code(), std::string("semantic: ") + e.what());
            }
        }
    }
    if (plan.tools.count(Tool::page) > 0) {
        FetchResult fetched = store_->fetch_pages(plan.page_indices);
        for (const Page& page : fetched.pages) {
            all.push_back({page.page_id, 1.0, Tool::page});
        }
    }

    // dedup by page id keeping the highest score
    std::unordered_map<std::size_t, RetrievalHit> best;
    for (const RetrievalHit& hit : all) {
        auto it = best.find(hit.page_id);
        if (it == best.end() || hit.score > it->second.score) {
            best[hit.page_id] = hit;
        }
    }
    std::vector<RetrievalHit> merged;
    merged.reserve(best.size());
    for (const auto& [_, hit] : best) {
        merged.push_back(hit);
    }
    sort_hits(merged);
    return merged;
}

TempMemory DeepSearchEngine::integrate(const std::string& query, const TempMemory& memory,
                                       const std::vector<RetrievalHit>& hits) {
    std::vector<std::string> evidence;
    evidence.reserve(hits.size());
    for (const RetrievalHit& hit : hits) {
        evidence.push_back("[page " + std::to_string(hit.page_id) + "] " +
                           store_->page(hit.page_id).text);
    }
    nlohmann::json doc = ask_json(Role::integrator, prompts::integrator_system(),
                                  prompts::integrator_user(query, memory.text, evidence));
    if (!doc.is_object() || !doc.contains("memory") || !doc["memory"].is_string()) {
        throw Error(ErrorCode::integration_failed,
                    "integrator reply must be {\"memory\": \"...\"}; got " + doc.dump());
    }
    return {doc["memory"].get<std::string>(), memory.iteration + 1};
}

ReflectionOutcome DeepSearchEngine::parse_reflection(const nlohmann::json& doc) const {
    if (!doc.is_object() || !doc.contains("enough") || !doc["enough"].is_boolean()) {
        throw Error(ErrorCode::reflection_failed,
                    "reflection reply must carry a boolean \"enough\"; got " + doc.dump());
    }
    ReflectionOutcome outcome;
    outcome.enough = doc["enough"].get<bool>();
    if (doc.contains("new_request") && doc["new_request"].is_string() &&
        !doc["new_request"].get<std::string>().empty()) {
        outcome.new_request = doc["new_request"].get<std::string>();
    }
    if (outcome.enough && outcome.new_request.has_value()) {
        outcome.new_request.reset();  // enough wins; a leftover request is dropped
    }
    if (!outcome.enough && !outcome.new_request.has_value()) {
        throw Error(ErrorCode::reflection_failed,
                    "reflection with enough=false must carry a non-empty new_request");
    }
    return outcome;
}

ReflectionOutcome DeepSearchEngine::reflect(const TempMemory& memory, const std::string& question,
                                            const std::vector<std::string>& experiences) {
    if (question.empty()) {
        throw Error(ErrorCode::invalid_argument, "question must be non-empty");
    }
    nlohmann::json doc = ask_json(Role::reflector, prompts::reflector_system(),
                                  prompts::reflector_user(question, memory.text, experiences));
    return parse_reflection(doc);
}

std::string DeepSearchEngine::answer(const std::string& question, const TempMemory& memory) {
    ModelReply reply =
        ask(Role::answerer, prompts::answerer_system(), prompts::answerer_user(question, memory.text));
    std::string text = trim(reply.text);
    if (text.empty()) {
        throw Error(ErrorCode::answer_failed, "answerer returned an empty reply");
    }
    return text;
}

Trajectory DeepSearchEngine::run(const std::string& question, const Banks* banks,
                                 const SearchConfig& config, const std::string& question_id) {
    if (question.empty()) {
        throw Error(ErrorCode::invalid_argument, "question must be non-empty");
    }
    if (config.max_iterations == 0) {
        throw Error(ErrorCode::invalid_config, "max_iterations must be at least 1");
    }

    run_usage_ = Usage{};
    Trajectory trajectory;
    trajectory.question_id = question_id;
    trajectory.question = question;

    SituationAbstractor abstractor(*gateway_);
    std::string query = question;
    TempMemory memory{"", 0};

    for (std::size_t i = 0; i < config.max_iterations; ++i) {
        try {
            Step step;
            step.index = i;
            step.query = query;

            std::vector<std::string> planning_exps;
            if (banks != nullptr && !banks->planning.empty()) {
                std::string condition =
                    build_condition(StepModule::planning, question, query, memory.text);
                std::string situation = abstractor.abstract(condition, &run_usage_);
                for (const ScoredExperience& scored : banks->planning.retrieve_topk(
                         condition, situation, *embedder_, config.retrieval,
                         config.weighted_sampling, config.seed)) {
                    planning_exps.push_back(render_experience(scored.entry));
                    step.injected_planning_exps.push_back(scored.entry.entry_id);
                }
            }

            step.plan = plan(query, memory, planning_exps);
            step.hits = execute_search(step.plan, config.limits);
            memory = integrate(query, memory, step.hits);
            step.memory_after = memory;

            std::vector<std::string> reflection_exps;
            if (banks != nullptr && !banks->reflection.empty()) {
                std::string condition =
                    build_condition(StepModule::reflection, question, query, memory.text);
                std::string situation = abstractor.abstract(condition, &run_usage_);
                for (const ScoredExperience& scored : banks->reflection.retrieve_topk(
                         condition, situation, *embedder_, config.retrieval,
                         config.weighted_sampling, config.seed)) {
                    reflection_exps.push_back(render_experience(scored.entry));
                    step.injected_reflection_exps.push_back(scored.entry.entry_id);
                }
            }

            step.reflection = reflect(memory, question, reflection_exps);
            bool enough = step.reflection.enough;
            if (!enough) {
                query = *step.reflection.new_request;
            }
            trajectory.steps.push_back(std::move(step));
            if (enough) {
                trajectory.terminated_by = Termination::enough;
                break;
            }
            trajectory.terminated_by = Termination::iteration_cap;
        } catch (const Error& e) {
            throw Error(e.code(), "step " + std::to_string(i) + ": " + e.what());
        }
    }

    trajectory.final_memory = memory;
    try {
        trajectory.answer = answer(question, memory);
    } catch (const Error& e) {
        throw Error(e.code(), std::string("answer: ") + e.what());
    }
    trajectory.usage = run_usage_;
    return trajectory;
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

nlohmann::json plan_to_json(const Plan& plan) {
    nlohmann::json tools = nlohmann::json::array();
    for (Tool tool : plan.tools) {
        tools.push_back(tool_name(tool));
    }
    return {{"info_needs", plan.info_needs},
            {"tools", tools},
            {"keyword_queries", plan.keyword_queries},
            {"vector_queries", plan.vector_queries},
            {"page_indices", plan.page_indices}};
}

Plan plan_from_json(const nlohmann::json& doc) {
    Plan plan;
    plan.info_needs = doc.value("info_needs", std::vector<std::string>{});
    for (const auto& name : doc.value("tools", nlohmann::json::array())) {
        plan.tools.insert(tool_from_name(name.get<std::string>()));
    }
    plan.keyword_queries = doc.value("keyword_queries", std::vector<std::string>{});
    plan.vector_queries = doc.value("vector_queries", std::vector<std::string>{});
    plan.page_indices = doc.value("page_indices", std::vector<long long>{});
    return plan;
}

namespace {

nlohmann::json memory_to_json(const TempMemory& memory) {
    return {{"text", memory.text}, {"iteration", memory.iteration}};
}

TempMemory memory_from_json(const nlohmann::json& doc) {
    return {doc.at("text").get<std::string>(), doc.at("iteration").get<std::size_t>()};
}

}  // namespace

nlohmann::json trajectory_to_json(const Trajectory& trajectory) {
    nlohmann::json steps = nlohmann::json::array();
    for (const Step& step : trajectory.steps) {
        nlohmann::json hits = nlohmann::json::array();
        for (const RetrievalHit& hit : step.hits) {
            hits.push_back(
                {{"page_id", hit.page_id}, {"score", hit.score}, {"tool", tool_name(hit.tool)}});
        }
        nlohmann::json reflection = {{"enough", step.reflection.enough}};
        if (step.reflection.new_request.has_value()) {
            reflection["new_request"] = *step.reflection.new_request;
        }
        steps.push_back({{"index", step.index},
                         {"query", step.query},
                         {"plan", plan_to_json(step.plan)},
                         {"hits", hits},
                         {"memory_after", memory_to_json(step.memory_after)},
                         {"reflection", reflection},
                         {"injected_planning_exps", step.injected_planning_exps},
                         {"injected_reflection_exps", step.injected_reflection_exps}});
    }
    return {{"format_version", 1},
            {"question_id", trajectory.question_id},
            {"question", trajectory.question},
            {"steps", steps},
            {"final_memory", memory_to_json(trajectory.final_memory)},
            {"answer", trajectory.answer},
            {"usage",
             {{"prompt_tokens", trajectory.usage.prompt_tokens},
              {"completion_tokens", trajectory.usage.completion_tokens},
              {"total_tokens", trajectory.usage.total()}}},
            {"terminated_by", termination_name(trajectory.terminated_by)}};
}

Trajectory trajectory_from_json(const nlohmann::json& doc) {
    Trajectory trajectory;
    trajectory.question_id = doc.value("question_id", std::string{});
    trajectory.question = doc.at("question").get<std::string>();
    for (const auto& s : doc.at("steps")) {
        Step step;
        step.index = s.at("index").get<std::size_t>();
        step.query = s.at("query").get<std::string>();
        step.plan = plan_from_json(s.at("plan"));
        for (const auto& h : s.at("hits")) {
            step.hits.push_back({h.at("page_id").get<std::size_t>(), h.at("score").get<double>(),
                                 tool_from_name(h.at("tool").get<std::string>())});
        }
        step.memory_after = memory_from_json(s.at("memory_after"));
        step.reflection.enough = s.at("reflection").at("enough").get<bool>();
        if (s.at("reflection").contains("new_request")) {
            step.reflection.new_request = s.at("reflection").at("new_request").get<std::string>();
        }
        step.injected_planning_exps =
            s.value("injected_planning_exps", std::vector<std::string>{});
        step.injected_reflection_exps =
            s.value("injected_reflection_exps", std::vector<std::string>{});
        trajectory.steps.push_back(std::move(step));
    }
    trajectory.final_memory = memory_from_json(doc.at("final_memory"));
    trajectory.answer = doc.at("answer").get<std::string>();
    trajectory.usage.prompt_tokens = doc.at("usage").at("prompt_tokens").get<std::size_t>();
    trajectory.usage.completion_tokens = doc.at("usage").at("completion_tokens").get<std::size_t>();
    std::string term = doc.at("terminated_by").get<std::string>();
    trajectory.terminated_by = term == "enough" ? Termination::enough : Termination::iteration_cap;
    return trajectory;
}

void save_trajectory(const Trajectory& trajectory, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::load_error, "cannot open " + path.string() + " for writing");
    }
    out << trajectory_to_json(trajectory).dump(2) << "\n";
}

Trajectory load_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::load_error, "cannot open trajectory file " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::load_error, "trajectory file " + path.string() + ": " + e.what());
    }
    return trajectory_from_json(doc);
}

}  // namespace memsearch
