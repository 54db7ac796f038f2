#include "memsearch/errors.hpp"

namespace memsearch {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::corpus_empty: return "corpus-empty";
        case ErrorCode::invalid_query: return "invalid-query";
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::invalid_config: return "invalid-config";
        case ErrorCode::provider_error: return "provider-error";
        case ErrorCode::fixture_exhausted: return "fixture-exhausted";
        case ErrorCode::malformed_output: return "malformed-output";
        case ErrorCode::schema_violation: return "schema-violation";
        case ErrorCode::planning_failed: return "planning-failed";
        case ErrorCode::integration_failed: return "integration-failed";
        case ErrorCode::reflection_failed: return "reflection-failed";
        case ErrorCode::answer_failed: return "answer-failed";
        case ErrorCode::incomplete_evaluation: return "incomplete-evaluation";
        case ErrorCode::invalid_score: return "invalid-score";
        case ErrorCode::distillation_failed: return "distillation-failed";
        case ErrorCode::abstraction_failed: return "abstraction-failed";
        case ErrorCode::invalid_insert: return "invalid-insert";
        case ErrorCode::load_error: return "load-error";
        case ErrorCode::invalid_split: return "invalid-split";
        case ErrorCode::stage_failed: return "stage-failed";
    }
    return "unknown";
}

}  // namespace memsearch
