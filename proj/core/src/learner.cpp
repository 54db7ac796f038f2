#include "memsearch/learner.hpp"

#include "memsearch/errors.hpp"
#include "memsearch/prompts.hpp"
#include "memsearch/text.hpp"

namespace memsearch {

LabelDecision label_quality(int total, int k_low, int k_high) {
    if (k_low < 0 || k_high > kRubricTotalMax || k_low > k_high) {
        throw Error(ErrorCode::invalid_config,
                    "thresholds must satisfy 0 <= k_low <= k_high <= 12; got (" +
                        std::to_string(k_low) + ", " + std::to_string(k_high) + ")");
    }
    if (total > k_high) {
        return LabelDecision::good;
    }
    if (total < k_low) {
        return LabelDecision::bad;
    }
    return LabelDecision::skip;
}

namespace {

// IF <situation> THEN <strategy>
bool matches_if_then_shape(const std::string& text) {
    return text.rfind("IF ", 0) == 0 && text.find(" THEN ") != std::string::npos;
}

std::string require_string(const nlohmann::json& doc, const char* field) {
    if (!doc.contains(field) || !doc[field].is_string() ||
        doc[field].get<std::string>().empty()) {
        throw Error(ErrorCode::distillation_failed,
                    std::string("learner reply is missing \"") + field + "\"");
    }
    return doc[field].get<std::string>();
}

}  // namespace

DistilledExperience ReflectionLearner::distill(const Trajectory& trajectory, const Step& step,
                                               const RubricReport& report,
                                               const std::string& question, QualityLabel quality,
                                               Usage* tally) {
    if (report.step_index != step.index) {
        throw Error(ErrorCode::invalid_argument, "report does not belong to the given step");
    }

    Role role;
    std::string system_prompt;
    std::string user_prompt;
    if (report.module == StepModule::planning) {
        role = Role::learner_planning;
        system_prompt = prompts::learner_planning_system();
        user_prompt = prompts::learner_planning_user(
            question, render_planning_trace(trajectory, step.index), report.diagnosis);
    } else {
        role = Role::learner_reflection;
        system_prompt = prompts::learner_reflection_system();
        user_prompt = prompts::learner_reflection_user(
            question, render_reflection_trace(trajectory, step.index), report.diagnosis);
    }

    ModelReply reply = gateway_->complete(role, system_prompt, user_prompt);
    if (tally != nullptr) {
        tally->add(reply);
    }

    nlohmann::json doc;
    try {
        doc = gateway_->parse_reply(reply.text);
    } catch (const Error& first) {
        // one repair re-ask, then the record is lost
        std::string repair = user_prompt;
        repair += "\n\nYour previous reply could not be parsed (";
        repair += first.what();
        repair += "). Return ONLY the JSON object.";
        ModelReply repaired = gateway_->complete(role, system_prompt, repair);
        if (tally != nullptr) {
            tally->add(repaired);
        }
        try {
            doc = gateway_->parse_reply(repaired.text);
        } catch (const Error& second) {
            throw Error(ErrorCode::distillation_failed,
                        std::string("learner reply unparseable after repair: ") + second.what());
        }
    }

    DistilledExperience exp;
    exp.thinking = require_string(doc, "thinking");
    exp.summary = require_string(doc, "summary");
    exp.situation = require_string(doc, "situation");
    exp.experience_text = require_string(doc, "experience");
    if (!matches_if_then_shape(exp.experience_text)) {
        throw Error(ErrorCode::schema_violation,
                    "experience must start with \"IF \" and contain \" THEN \"; got: " +
                        exp.experience_text);
    }
    exp.kind = report.module;
    exp.quality = quality;
    exp.source = {trajectory.question_id, step.index, report.module, report.total};
    return exp;
}

AccumulateResult ReflectionLearner::accumulate(const std::vector<Trajectory>& trajectories,
                                               const std::vector<std::vector<RubricReport>>& reports,
                                               const std::vector<std::string>& questions,
                                               const AccumulateConfig& config) {
    if (trajectories.size() != reports.size() || trajectories.size() != questions.size()) {
        throw Error(ErrorCode::invalid_argument,
                    "trajectories, reports and questions must align one-to-one");
    }

    AccumulateResult result;
    for (std::size_t t = 0; t < trajectories.size(); ++t) {
        const Trajectory& trajectory = trajectories[t];
        for (const RubricReport& report : reports[t]) {
            LabelDecision decision = label_quality(report.total, config.k_low, config.k_high);
            if (decision == LabelDecision::skip) {
                ++result.skipped;
                continue;
            }
            QualityLabel quality =
                decision == LabelDecision::good ? QualityLabel::good : QualityLabel::bad;
            const Step& step = trajectory.steps.at(report.step_index);
            try {
                DistilledExperience exp = distill(trajectory, step, report, questions[t], quality,
                                                  &result.usage);
                ++result.counts[{exp.kind, exp.quality}];
                if (exp.kind == StepModule::planning) {
                    result.planning.push_back(std::move(exp));
                } else {
                    result.reflection.push_back(std::move(exp));
                }
            } catch (const Error& e) {
                result.failures.push_back("trajectory " + trajectory.question_id + " step " +
                                          std::to_string(report.step_index) + " " +
                                          module_name(report.module) + ": " + e.what());
            }
        }
    }
    return result;
}

BankEntry make_bank_entry(const DistilledExperience& exp, const std::string& condition,
                          const Embedder& embedder) {
    BankEntry entry;
    entry.entry_id = exp.source.key();
    entry.condition = condition;
    entry.situation = exp.situation;
    entry.key_text = condition + exp.situation;
    entry.key_embedding = embedder.embed(entry.key_text);
    entry.experience_text = exp.experience_text;
    entry.kind = exp.kind;
    entry.quality = exp.quality;
    entry.source = exp.source;
    return entry;
}

}  // namespace memsearch
