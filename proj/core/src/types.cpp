#include "memsearch/types.hpp"

#include "memsearch/errors.hpp"

namespace memsearch {

const char* module_name(StepModule m) {
    return m == StepModule::planning ? "Planning" : "Reflection";
}

const char* module_kind_tag(StepModule m) {
    return m == StepModule::planning ? "P" : "R";
}

StepModule module_from_name(const std::string& name) {
    if (name == "Planning") return StepModule::planning;
    if (name == "Reflection") return StepModule::reflection;
    throw Error(ErrorCode::invalid_argument, "unknown module: " + name);
}

StepModule module_from_kind_tag(const std::string& tag) {
    if (tag == "P") return StepModule::planning;
    if (tag == "R") return StepModule::reflection;
    throw Error(ErrorCode::invalid_argument, "unknown experience kind: " + tag);
}

const char* quality_name(QualityLabel q) {
    return q == QualityLabel::good ? "good" : "bad";
}

QualityLabel quality_from_name(const std::string& name) {
    if (name == "good") return QualityLabel::good;
    if (name == "bad") return QualityLabel::bad;
    throw Error(ErrorCode::invalid_argument, "unknown quality label: " + name);
}

std::string ExperienceSource::key() const {
    return trajectory_id + ":" + std::to_string(step_index) + ":" + module_kind_tag(module);
}

}  // namespace memsearch
