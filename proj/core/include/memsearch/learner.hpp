#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "memsearch/evaluator.hpp"
#include "memsearch/expbank.hpp"
#include "memsearch/llm_gateway.hpp"
#include "memsearch/types.hpp"

namespace memsearch {

enum class LabelDecision { good, bad, skip };

// Strict thresholds: good above k_high, bad below k_low, skip on or between
// the boundaries. Requires 0 <= k_low <= k_high <= 12.
LabelDecision label_quality(int total, int k_low, int k_high);

struct DistilledExperience {
    std::string thinking;
    std::string summary;
    std::string situation;
    std::string experience_text;  // must start with "IF " and contain " THEN "
    StepModule kind = StepModule::planning;
    QualityLabel quality = QualityLabel::good;
    ExperienceSource source;
};

struct AccumulateConfig {
    int k_low = 5;
    int k_high = 10;
};

struct AccumulateResult {
    std::vector<DistilledExperience> planning;
    std::vector<DistilledExperience> reflection;
    // counts keyed (kind, quality); skipped = reports inside the band
    std::map<std::pair<StepModule, QualityLabel>, std::size_t> counts;
    std::size_t skipped = 0;
    std::vector<std::string> failures;  // per-record distillation failures
    Usage usage;
};

// Turns judged steps into abstract IF-THEN experiences via the
// self-reflection prompts.
class ReflectionLearner {
public:
    explicit ReflectionLearner(Gateway& gateway) : gateway_(&gateway) {}

    // report.module selects the planning or reflection template; the judged
    // trace and the report diagnosis feed the prompt. The reply must carry
    // {thinking, summary, situation, experience}.
    DistilledExperience distill(const Trajectory& trajectory, const Step& step,
                                const RubricReport& report, const std::string& question,
                                QualityLabel quality, Usage* tally = nullptr);

    // Labels every report against the thresholds and distills the passing
    // ones. Individual failures are collected; the batch continues.
    AccumulateResult accumulate(const std::vector<Trajectory>& trajectories,
                                const std::vector<std::vector<RubricReport>>& reports,
                                const std::vector<std::string>& questions,
                                const AccumulateConfig& config);

private:
    Gateway* gateway_;
};

// Builds the bank record for a distilled experience. The condition comes
// from the source step (query for P, question + memory for R); the entry id
// is the source key.
BankEntry make_bank_entry(const DistilledExperience& exp, const std::string& condition,
                          const Embedder& embedder);

}  // namespace memsearch
