#include "memsearch/evaluator.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "memsearch/errors.hpp"
#include "memsearch/prompts.hpp"

namespace memsearch {

const std::array<std::string, 4>& planning_dimensions() {
    static const std::array<std::string, 4> dims = {
        "Info Needs Coverage",
        "Info Needs Non-Redundancy",
        "Tool-Info Alignment",
        "Planning Efficiency",
    };
    return dims;
}

const std::array<std::string, 4>& reflection_dimensions() {
    static const std::array<std::string, 4> dims = {
        "Sufficiency Judgment Accuracy",
        "Minimal Sufficiency Recognition",
        "Follow-up Query Quality",
        "Answer Completeness Awareness",
    };
    return dims;
}

const std::array<std::string, 4>& dimensions_for(StepModule module) {
    return module == StepModule::planning ? planning_dimensions() : reflection_dimensions();
}

namespace {

// Canonicalizes judge-emitted dimension names: "--" and the en dash both
// collapse to "-".
std::string canonical_dimension(const std::string& name) {
    std::string out;
    out.reserve(name.size());
    for (std::size_t i = 0; i < name.size(); ++i) {
        if (name[i] == '-' && i + 1 < name.size() && name[i + 1] == '-') {
            out.push_back('-');
            ++i;
        } else if (name.compare(i, 3, "–") == 0) {
            out.push_back('-');
            i += 2;
        } else {
            out.push_back(name[i]);
        }
    }
    return out;
}

std::optional<StepModule> module_of_dimensions(const std::map<std::string, int>& dim_scores) {
    for (StepModule module : {StepModule::planning, StepModule::reflection}) {
        const auto& expected = dimensions_for(module);
        if (dim_scores.size() != expected.size()) {
            continue;
        }
        bool all = true;
        for (const std::string& name : expected) {
            if (dim_scores.find(name) == dim_scores.end()) {
                all = false;
                break;
            }
        }
        if (all) {
            return module;
        }
    }
    return std::nullopt;
}

}  // namespace

int aggregate(const std::map<std::string, int>& dim_scores) {
    auto module = module_of_dimensions(dim_scores);
    if (!module.has_value()) {
        throw Error(ErrorCode::invalid_score,
                    "dimension scores must hold exactly the four rubrics of one module");
    }
    int total = 0;
    for (const auto& [name, score] : dim_scores) {
        if (score < kRubricMin || score > kRubricMax) {
            throw Error(ErrorCode::invalid_score,
                        name + " score " + std::to_string(score) + " outside [0,3]");
        }
        total += score;
    }
    return total;
}

std::vector<RawReportEntry> parse_evaluator_reply(const std::string& text, bool strict_json) {
    nlohmann::json doc = extract_json(text, strict_json);
    if (!doc.is_object() || !doc.contains("results") || !doc["results"].is_array()) {
        throw Error(ErrorCode::malformed_output,
                    "evaluator reply must carry a \"results\" array; got " + doc.dump());
    }
    std::vector<RawReportEntry> entries;
    for (const auto& item : doc["results"]) {
        RawReportEntry entry;
        if (!item.contains("step") || !item["step"].is_number_integer()) {
            throw Error(ErrorCode::malformed_output, "result entry missing integer step");
        }
        long long step = item["step"].get<long long>();
        if (step < 0) {
            throw Error(ErrorCode::malformed_output,
                        "result entry has negative step " + std::to_string(step));
        }
        entry.step = static_cast<std::size_t>(step);
        entry.module = item.value("module", std::string{});
        StepModule module;
        try {
            module = module_from_name(entry.module);
        } catch (const Error& e) {
            throw Error(ErrorCode::schema_violation, e.what());
        }

        if (!item.contains("rubrics") || !item["rubrics"].is_object()) {
            throw Error(ErrorCode::malformed_output, "result entry missing rubrics object");
        }
        const auto& expected = dimensions_for(module);
        for (const auto& [raw_name, value] : item["rubrics"].items()) {
            std::string name = canonical_dimension(raw_name);
            if (std::find(expected.begin(), expected.end(), name) == expected.end()) {
                throw Error(ErrorCode::schema_violation,
                            "unknown rubric dimension \"" + raw_name + "\" for module " +
                                entry.module);
            }
            if (!value.is_number_integer()) {
                throw Error(ErrorCode::invalid_score, name + " score is not an integer");
            }
            int score = value.get<int>();
            if (score < kRubricMin || score > kRubricMax) {
                throw Error(ErrorCode::invalid_score,
                            name + " score " + std::to_string(score) + " outside [0,3]");
            }
            entry.rubrics[name] = score;
        }
        if (entry.rubrics.size() != expected.size()) {
            throw Error(ErrorCode::schema_violation,
                        "module " + entry.module + " needs all four rubric dimensions");
        }
        entry.diagnosis = item.value("reason and advice", std::string{});
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::string render_trace(const Trajectory& trajectory) {
    std::ostringstream out;
    for (const Step& step : trajectory.steps) {
        out << render_planning_trace(trajectory, step.index);
        out << render_reflection_trace(trajectory, step.index);
    }
    return out.str();
}

namespace {

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

std::string join_indices(const std::vector<long long>& indices) {
    std::string out;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (i > 0) out += ", ";
        out += std::to_string(indices[i]);
    }
    return out;
}

}  // namespace

std::string render_planning_trace(const Trajectory& trajectory, std::size_t step_index) {
    const Step& step = trajectory.steps.at(step_index);
    std::ostringstream out;
    out << "Step " << step.index << " [Planning]\n";
    out << "  Query: " << step.query << "\n";
    out << "  Info needs: " << join(step.plan.info_needs, "; ") << "\n";
    std::vector<std::string> tools;
    for (Tool tool : step.plan.tools) {
        tools.push_back(tool_name(tool));
    }
    out << "  Tools: " << join(tools, ", ") << "\n";
    if (!step.plan.keyword_queries.empty()) {
        out << "  Keyword queries: " << join(step.plan.keyword_queries, "; ") << "\n";
    }
    if (!step.plan.vector_queries.empty()) {
        out << "  Vector queries: " << join(step.plan.vector_queries, "; ") << "\n";
    }
    if (!step.plan.page_indices.empty()) {
        out << "  Page indices: " << join_indices(step.plan.page_indices) << "\n";
    }
    std::vector<std::string> pages;
    for (const RetrievalHit& hit : step.hits) {
        pages.push_back(std::to_string(hit.page_id));
    }
    out << "  Retrieved pages: " << (pages.empty() ? "(none)" : join(pages, ", ")) << "\n";
    return out.str();
}

std::string render_reflection_trace(const Trajectory& trajectory, std::size_t step_index) {
    const Step& step = trajectory.steps.at(step_index);
    std::ostringstream out;
    out << "Step " << step.index << " [Reflection]\n";
    out << "  Temp memory: " << prompts::render_memory(step.memory_after.text) << "\n";
    out << "  enough = " << (step.reflection.enough ? "true" : "false") << "\n";
    if (step.reflection.new_request.has_value()) {
        out << "  New request: " << *step.reflection.new_request << "\n";
    }
    return out.str();
}

std::vector<RubricReport> TrajectoryEvaluator::evaluate(const Trajectory& trajectory,
                                                        const std::string& question,
                                                        const std::string& reference_answer,
                                                        Usage* tally) {
    if (trajectory.steps.empty()) {
        throw Error(ErrorCode::invalid_argument, "cannot evaluate an empty trajectory");
    }
    if (reference_answer.empty()) {
        throw Error(ErrorCode::invalid_argument, "a reference answer is required");
    }

    ModelReply reply = gateway_->complete(
        Role::evaluator, prompts::evaluator_system(),
        prompts::evaluator_user(question, reference_answer, trajectory.answer,
                                render_trace(trajectory)));
    if (tally != nullptr) {
        tally->add(reply);
    }

    std::vector<RawReportEntry> entries = parse_evaluator_reply(reply.text, gateway_->strict_json());

    std::map<std::pair<std::size_t, StepModule>, RawReportEntry> by_key;
    for (RawReportEntry& entry : entries) {
        StepModule module = module_from_name(entry.module);
        if (entry.step >= trajectory.steps.size()) {
            throw Error(ErrorCode::schema_violation,
                        "evaluator scored step " + std::to_string(entry.step) +
                            " but the trajectory has " + std::to_string(trajectory.steps.size()) +
                            " steps");
        }
        auto key = std::make_pair(entry.step, module);
        if (by_key.count(key) > 0) {
            throw Error(ErrorCode::schema_violation,
                        "duplicate report for step " + std::to_string(entry.step) + " " +
                            entry.module);
        }
        by_key.emplace(key, std::move(entry));
    }

    std::vector<std::string> gaps;
    std::vector<RubricReport> reports;
    for (const Step& step : trajectory.steps) {
        for (StepModule module : {StepModule::planning, StepModule::reflection}) {
            auto it = by_key.find({step.index, module});
            if (it == by_key.end()) {
                gaps.push_back("step " + std::to_string(step.index) + " " + module_name(module));
                continue;
            }
            RubricReport report;
            report.step_index = step.index;
            report.module = module;
            report.dim_scores = it->second.rubrics;
            report.total = aggregate(report.dim_scores);  // never trusted from the model
            report.diagnosis = it->second.diagnosis;
            reports.push_back(std::move(report));
        }
    }
    if (!gaps.empty()) {
        throw Error(ErrorCode::incomplete_evaluation,
                    "evaluator output missing: " + join(gaps, "; "));
    }
    return reports;
}

nlohmann::json report_to_json(const RubricReport& report) {
    return {{"step_index", report.step_index},
            {"module", module_name(report.module)},
            {"dim_scores", report.dim_scores},
            {"total", report.total},
            {"diagnosis", report.diagnosis}};
}

RubricReport report_from_json(const nlohmann::json& doc) {
    RubricReport report;
    report.step_index = doc.at("step_index").get<std::size_t>();
    report.module = module_from_name(doc.at("module").get<std::string>());
    report.dim_scores = doc.at("dim_scores").get<std::map<std::string, int>>();
    report.total = aggregate(report.dim_scores);
    report.diagnosis = doc.value("diagnosis", std::string{});
    return report;
}

void save_reports(const std::vector<RubricReport>& reports, const std::filesystem::path& path) {
    nlohmann::json doc = nlohmann::json::array();
    for (const RubricReport& report : reports) {
        doc.push_back(report_to_json(report));
    }
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::load_error, "cannot open " + path.string() + " for writing");
    }
    out << doc.dump(2) << "\n";
}

std::vector<RubricReport> load_reports(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::load_error, "cannot open report file " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::load_error, "report file " + path.string() + ": " + e.what());
    }
    std::vector<RubricReport> reports;
    for (const auto& item : doc) {
        reports.push_back(report_from_json(item));
    }
    return reports;
}

}  // namespace memsearch
