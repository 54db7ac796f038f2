#pragma once

#include <stdexcept>
#include <string>

namespace memsearch {

enum class ErrorCode {
    corpus_empty,
    invalid_query,
    invalid_argument,
    invalid_config,
    provider_error,
    fixture_exhausted,
    malformed_output,
    schema_violation,
    planning_failed,
    integration_failed,
    reflection_failed,
    answer_failed,
    incomplete_evaluation,
    invalid_score,
    distillation_failed,
    abstraction_failed,
    invalid_insert,
    load_error,
    invalid_split,
    stage_failed,
};

const char* error_code_name(ErrorCode code);

// All recoverable failures in the library are reported as Error; the code
// identifies the failure class and what() carries the diagnostic text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace memsearch
