#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memsearch/expbank.hpp"
#include "memsearch/llm_gateway.hpp"
#include "memsearch/memstore.hpp"

namespace memsearch {

// Tool-aware retrieval plan. Every selected tool must carry at least one
// query/index and no queries may name an unselected tool.
struct Plan {
    std::vector<std::string> info_needs;
    std::set<Tool> tools;
    std::vector<std::string> keyword_queries;
    std::vector<std::string> vector_queries;
    std::vector<long long> page_indices;
};

struct TempMemory {
    std::string text;
    std::size_t iteration = 0;
};

struct ReflectionOutcome {
    bool enough = false;
    std::optional<std::string> new_request;  // present iff enough is false
};

struct Step {
    std::size_t index = 0;
    std::string query;
    Plan plan;
    std::vector<RetrievalHit> hits;
    TempMemory memory_after;
    ReflectionOutcome reflection;
    std::vector<std::string> injected_planning_exps;
    std::vector<std::string> injected_reflection_exps;
};

enum class Termination { enough, iteration_cap };

const char* termination_name(Termination t);

struct Trajectory {
    std::string question_id;
    std::string question;
    std::vector<Step> steps;
    TempMemory final_memory;
    std::string answer;
    Usage usage;
    Termination terminated_by = Termination::enough;
};

struct ToolLimits {
    std::size_t keyword = 5;
    std::size_t semantic = 5;
    // page lookups are explicit indices, never limited
};

struct SearchConfig {
    std::size_t max_iterations = 5;
    ToolLimits limits;
    RetrievalConfig retrieval;
    bool weighted_sampling = false;
    std::uint64_t seed = 0;
};

struct Banks {
    ExperienceBank planning;
    ExperienceBank reflection;
};

// The iterative plan -> search -> integrate -> reflect loop, with optional
// experience injection ahead of the planning and reflection calls. One
// engine instance runs one search at a time.
class DeepSearchEngine {
public:
    DeepSearchEngine(Gateway& gateway, const MemoryStore& store, const Embedder& embedder);

    Plan plan(const std::string& query, const TempMemory& memory,
              const std::vector<std::string>& experiences);

    std::vector<RetrievalHit> execute_search(const Plan& plan, const ToolLimits& limits) const;

    TempMemory integrate(const std::string& query, const TempMemory& memory,
                         const std::vector<RetrievalHit>& hits);

    ReflectionOutcome reflect(const TempMemory& memory, const std::string& question,
                              const std::vector<std::string>& experiences);

    std::string answer(const std::string& question, const TempMemory& memory);

    // banks == nullptr runs the plain loop; empty banks emit byte-identical
    // prompts to the plain loop. Any stage error is rethrown wrapped with
    // the step index.
    Trajectory run(const std::string& question, const Banks* banks, const SearchConfig& config,
                   const std::string& question_id = "");

private:
    ModelReply ask(Role role, const std::string& system_prompt, const std::string& user_prompt);
    Plan parse_plan(const nlohmann::json& doc) const;
    ReflectionOutcome parse_reflection(const nlohmann::json& doc) const;
    nlohmann::json ask_json(Role role, const std::string& system_prompt, std::string user_prompt);

    Gateway* gateway_;
    const MemoryStore* store_;
    const Embedder* embedder_;
    Usage run_usage_;
};

nlohmann::json trajectory_to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const nlohmann::json& doc);
void save_trajectory(const Trajectory& trajectory, const std::filesystem::path& path);
Trajectory load_trajectory(const std::filesystem::path& path);

nlohmann::json plan_to_json(const Plan& plan);
Plan plan_from_json(const nlohmann::json& doc);

}  // namespace memsearch
