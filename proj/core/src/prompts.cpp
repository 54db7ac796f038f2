#include "memsearch/prompts.hpp"

namespace memsearch::prompts {

std::string render_memory(const std::string& memory_text) {
    return memory_text.empty() ? std::string("(empty)") : memory_text;
}

std::string render_experience_section(const std::vector<std::string>& experiences) {
    if (experiences.empty()) {
        return "";
    }
    std::string section = "PRIOR EXPERIENCE:\n";
    for (const std::string& experience : experiences) {
        section += "- " + experience + "\n";
    }
    section += "\n";
    return section;
}

std::string planner_system() {
    return "You are the planning module of a deep memory search system.\n"
           "Given the current query and the temp memory collected so far, identify the explicit "
           "information needs and produce a tool-aware retrieval plan.\n"
           "Available retrieval tools:\n"
           "- \"keyword\": BM25 keyword search over memory pages; provide keyword_queries.\n"
           "- \"semantic\": embedding similarity search; provide vector_queries.\n"
           "- \"page\": direct page lookup; provide page_indices.\n"
           "Select at least one tool and provide queries only for the tools you select.\n"
           "Return ONLY a valid JSON object:\n"
           "{\"info_needs\": [\"<sub-question>\", ...], "
           "\"tools\": [\"keyword\"|\"semantic\"|\"page\", ...], "
           "\"keyword_queries\": [\"<query>\", ...], "
           "\"vector_queries\": [\"<query>\", ...], "
           "\"page_indices\": [<int>, ...]}";
}

std::string planner_user(const std::string& query, const std::string& memory_text,
                         const std::vector<std::string>& experiences) {
    return "CURRENT QUERY: " + query + "\n\n" +
           "TEMP MEMORY:\n" + render_memory(memory_text) + "\n\n" +
           render_experience_section(experiences) +
           "Produce the retrieval plan JSON.";
}

std::string integrator_system() {
    return "You are the integration module of a deep memory search system.\n"
           "Condense the current query, the existing temp memory, and the newly retrieved "
           "evidence into one updated temp memory that keeps every detail relevant to the "
           "query.\n"
           "Return ONLY a valid JSON object: {\"memory\": \"<updated temp memory>\"}";
}

std::string integrator_user(const std::string& query, const std::string& memory_text,
                            const std::vector<std::string>& evidence_blocks) {
    std::string evidence;
    if (evidence_blocks.empty()) {
        evidence = "(no new evidence)\n";
    } else {
        for (const std::string& block : evidence_blocks) {
            evidence += block + "\n";
        }
    }
    return "CURRENT QUERY: " + query + "\n\n" +
           "TEMP MEMORY:\n" + render_memory(memory_text) + "\n\n" +
           "RETRIEVED EVIDENCE:\n" + evidence + "\n" +
           "Return the integration JSON.";
}

std::string reflector_system() {
    return "You are the reflection module of a deep memory search system.\n"
           "Decide whether the temp memory is sufficient to answer the original question.\n"
           "Return ONLY a valid JSON object:\n"
           "{\"enough\": true} when the memory is sufficient, or\n"
           "{\"enough\": false, \"new_request\": \"<targeted follow-up request>\"} when "
           "information is missing.";
}

std::string reflector_user(const std::string& question, const std::string& memory_text,
                           const std::vector<std::string>& experiences) {
    return "ORIGINAL QUESTION: " + question + "\n\n" +
           "TEMP MEMORY:\n" + render_memory(memory_text) + "\n\n" +
           render_experience_section(experiences) +
           "Return the reflection JSON.";
}

std::string answerer_system() {
    return "You answer questions from the final temp memory of a memory search run.\n"
           "Reply with the short final answer only.";
}

std::string answerer_user(const std::string& question, const std::string& memory_text) {
    return "QUESTION: " + question + "\n\n" +
           "FINAL MEMORY:\n" + render_memory(memory_text) + "\n\n" +
           "Answer:";
}

std::string evaluator_system() {
    return "You are an expert evaluator for an AI memory deep search system.\n"
           "Your task is to assess EACH step in the reasoning TRACE.\n"
           "Each step contains two modules: Planning and Reflection.\n"
           "Planning evaluates whether the retrieval strategy is complete, non-redundant, "
           "tool-aligned, and efficient.\n"
           "Reflection evaluates whether the system correctly determines if the current "
           "evidence is sufficient, whether it avoids unnecessary retrieval, and whether the "
           "follow-up request accurately targets missing information.";
}

std::string evaluator_user(const std::string& question, const std::string& reference_answer,
                           const std::string& model_answer, const std::string& trace) {
    return "QUESTION: " + question + "\n" +
           "REFERENCE_ANSWER: " + reference_answer + "\n" +
           "MODEL_ANSWER: " + model_answer + "\n" +
           "TRACE:\n" + trace + "\n\n" +
           "For each step in TRACE:\n"
           "(1) Evaluate the Planning module using the following rubrics:\n"
           "- Info Needs Coverage (0-3)\n"
           "- Info Needs Non-Redundancy (0-3)\n"
           "- Tool-Info Alignment (0-3)\n"
           "- Planning Efficiency (0-3)\n\n"
           "(2) Evaluate the Reflection module using the following rubrics:\n"
           "- Sufficiency Judgment Accuracy (0-3)\n"
           "- Minimal Sufficiency Recognition (0-3)\n"
           "- Follow-up Query Quality (0-3)\n"
           "- Answer Completeness Awareness (0-3)\n\n"
           "For each scored module, provide a concise reason and an abstract advice for future "
           "improvement or maintenance.\n"
           "Return ONLY a valid JSON object in the predefined format:\n"
           "{\"results\": [{\"step\": <int>, \"module\": \"Planning\" | \"Reflection\", "
           "\"rubrics\": {\"<dimension>\": <0-3>, ...}, \"reason and advice\": \"<text>\"}, "
           "...]}";
}

std::string learner_planning_system() {
    return "You are an AI TRACE Strategist/Auditor.\n"
           "Your goal is to derive GENERALIZABLE planning experience from judged planning "
           "traces.\n"
           "The output experience must follow the form:\n"
           "IF <abstract situation> THEN <retrieval planning strategy>.\n\n"
           "Do not copy concrete surface facts from the trace.\n"
           "Treat the diagnosed evaluation reason as authoritative supervision.\n"
           "The situation should describe an abstract query type or information gap.\n"
           "The experience should describe how to construct:\n"
           "(1) info_needs, and (2) retrieval tool selection strategy.";
}

std::string learner_planning_user(const std::string& question, const std::string& judged_trace,
                                  const std::string& reason) {
    return "QUESTION: " + question + "\n" +
           "JUDGED_PLANNING_TRACE:\n" + judged_trace + "\n" +
           "DIAGNOSED_REASON: " + reason + "\n\n" +
           "Your task:\n"
           "1. Analyze why this planning trace is high-quality or low-quality.\n"
           "2. Briefly summarize the trace.\n"
           "3. Abstract the planning situation without using concrete entities.\n"
           "4. Distill a reusable IF-THEN planning experience that can guide future retrieval "
           "planning.\n\n"
           "Return a JSON object with:\n"
           "{\"thinking\": \"<logic analysis grounded in the trace>\", "
           "\"summary\": \"<briefly describe this trace (question and plan)>\", "
           "\"situation\": \"<abstract situation>\", "
           "\"experience\": \"IF <abstract situation> THEN <info_need/tool action>\"}";
}

std::string learner_reflection_system() {
    return "You are an AI Memory TRACE Strategist/Auditor.\n"
           "Your goal is to derive GENERALIZABLE reflection experience from judged reflection "
           "traces.\n"
           "The output experience must follow the form:\n"
           "IF <abstract situation> THEN <decision strategy>.\n\n"
           "Do not copy concrete facts from the trace.\n"
           "Treat the diagnosed evaluation reason as authoritative supervision.\n"
           "The situation should describe an abstract (QUESTION + temp_memory) state.\n"
           "The experience should describe how to:\n"
           "(1) judge whether current memory is sufficient,\n"
           "(2) decide whether to stop or continue retrieval, and\n"
           "(3) generate a targeted new_request if needed.";
}

std::string learner_reflection_user(const std::string& question, const std::string& judged_trace,
                                    const std::string& reason) {
    return "QUESTION: " + question + "\n" +
           "JUDGED_REFLECTION_TRACE:\n" + judged_trace + "\n" +
           "DIAGNOSED_REASON: " + reason + "\n\n" +
           "Your task:\n"
           "1. Analyze why this reflection trace is high-quality or low-quality.\n"
           "2. Briefly summarize the trace.\n"
           "3. Abstract the reflection situation without using concrete entities.\n"
           "4. Distill a reusable IF-THEN reflection experience that can guide future "
           "sufficiency judgment.\n\n"
           "Return a JSON object with:\n"
           "{\"thinking\": \"<analysis of reflection success/failure>\", "
           "\"summary\": \"<briefly describe this trace (question and temp memory)>\", "
           "\"situation\": \"<abstract situation>\", "
           "\"experience\": \"IF <abstract situation> THEN <decision strategy>\"}";
}

std::string situation_system() {
    return "You abstract a concrete retrieval context into a high-level situation.\n"
           "Describe, in one or two sentences, the abstract type of query and information "
           "state, without naming concrete entities.\n"
           "Reply with the abstraction only.";
}

std::string situation_user(const std::string& condition) {
    return "CONTEXT:\n" + condition + "\n\nAbstraction:";
}

}  // namespace memsearch::prompts
