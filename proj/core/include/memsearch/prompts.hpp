#pragma once

#include <string>
#include <vector>

namespace memsearch {

// All prompt templates, as pure string builders. The planner and reflector
// templates append a delimited prior-experience section only when the
// experience list is non-empty, so an empty injection is byte-identical to
// the plain search loop.
namespace prompts {

std::string planner_system();
std::string planner_user(const std::string& query, const std::string& memory_text,
                         const std::vector<std::string>& experiences);

std::string integrator_system();
std::string integrator_user(const std::string& query, const std::string& memory_text,
                            const std::vector<std::string>& evidence_blocks);

std::string reflector_system();
std::string reflector_user(const std::string& question, const std::string& memory_text,
                           const std::vector<std::string>& experiences);

std::string answerer_system();
std::string answerer_user(const std::string& question, const std::string& memory_text);

std::string evaluator_system();
std::string evaluator_user(const std::string& question, const std::string& reference_answer,
                           const std::string& model_answer, const std::string& trace);

std::string learner_planning_system();
std::string learner_planning_user(const std::string& question, const std::string& judged_trace,
                                  const std::string& reason);

std::string learner_reflection_system();
std::string learner_reflection_user(const std::string& question, const std::string& judged_trace,
                                    const std::string& reason);

std::string situation_system();
std::string situation_user(const std::string& condition);

// "(empty)" placeholder for a blank temp memory, shared by every template.
std::string render_memory(const std::string& memory_text);

// One bullet per experience, prefixed with its quality tag, e.g.
// "- [from a successful step] IF ... THEN ...".
std::string render_experience_section(const std::vector<std::string>& experiences);

}  // namespace prompts

}  // namespace memsearch
