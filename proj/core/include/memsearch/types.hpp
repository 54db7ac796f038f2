#pragma once

#include <cstddef>
#include <string>

namespace memsearch {

// The two judged modules of a search step, and likewise the two experience
// kinds (planning -> P, reflection -> R).
enum class StepModule { planning, reflection };

const char* module_name(StepModule m);              // "Planning" / "Reflection"
const char* module_kind_tag(StepModule m);          // "P" / "R"
StepModule module_from_name(const std::string& name);
StepModule module_from_kind_tag(const std::string& tag);

enum class QualityLabel { good, bad };

const char* quality_name(QualityLabel q);
QualityLabel quality_from_name(const std::string& name);

// Provenance of a distilled experience: which judged step it came from.
struct ExperienceSource {
    std::string trajectory_id;
    std::size_t step_index = 0;
    StepModule module = StepModule::planning;
    int total = 0;

    // Stable identity used for bank deduplication and entry ids.
    std::string key() const;
};

}  // namespace memsearch
