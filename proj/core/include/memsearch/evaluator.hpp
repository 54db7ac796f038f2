#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memsearch/deepsearch.hpp"
#include "memsearch/llm_gateway.hpp"
#include "memsearch/types.hpp"

namespace memsearch {

// Four 0-3 rubric dimensions per module; a module total is their sum.
const std::array<std::string, 4>& planning_dimensions();
const std::array<std::string, 4>& reflection_dimensions();
const std::array<std::string, 4>& dimensions_for(StepModule module);

inline constexpr int kRubricMin = 0;
inline constexpr int kRubricMax = 3;
inline constexpr int kRubricTotalMax = 12;

struct RubricReport {
    std::size_t step_index = 0;
    StepModule module = StepModule::planning;
    std::map<std::string, int> dim_scores;
    int total = 0;          // always recomputed locally from dim_scores
    std::string diagnosis;  // the judge's combined reason and advice
};

// Validates that dim_scores holds exactly one module's four dimensions with
// values in [0,3] and returns their sum.
int aggregate(const std::map<std::string, int>& dim_scores);

struct RawReportEntry {
    std::size_t step = 0;
    std::string module;
    std::map<std::string, int> rubrics;
    std::string diagnosis;
};

// Parses the judge reply: {"results": [{step, module, rubrics,
// "reason and advice"}, ...]}. Dimension names are checked against the
// module's rubric set; scores outside [0,3] are rejected.
std::vector<RawReportEntry> parse_evaluator_reply(const std::string& text, bool strict_json = false);

// Deterministic textual rendering of a trajectory for the judge prompt.
std::string render_trace(const Trajectory& trajectory);
std::string render_planning_trace(const Trajectory& trajectory, std::size_t step_index);
std::string render_reflection_trace(const Trajectory& trajectory, std::size_t step_index);

class TrajectoryEvaluator {
public:
    explicit TrajectoryEvaluator(Gateway& gateway) : gateway_(&gateway) {}

    // One Planning and one Reflection report per step, in (step, module)
    // order. Missing pairs raise incomplete_evaluation naming every gap.
    std::vector<RubricReport> evaluate(const Trajectory& trajectory, const std::string& question,
                                       const std::string& reference_answer,
                                       Usage* tally = nullptr);

private:
    Gateway* gateway_;
};

nlohmann::json report_to_json(const RubricReport& report);
RubricReport report_from_json(const nlohmann::json& doc);
void save_reports(const std::vector<RubricReport>& reports, const std::filesystem::path& path);
std::vector<RubricReport> load_reports(const std::filesystem::path& path);

}  // namespace memsearch
