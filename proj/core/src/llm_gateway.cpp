#include "memsearch/llm_gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "memsearch/errors.hpp"
#include "memsearch/http.hpp"
#include "memsearch/text.hpp"

namespace memsearch {

const char* role_name(Role role) {
    switch (role) {
        case Role::planner: return "planner";
        case Role::integrator: return "integrator";
        case Role::reflector: return "reflector";
        case Role::answerer: return "answerer";
        case Role::evaluator: return "evaluator";
        case Role::learner_planning: return "learner_planning";
        case Role::learner_reflection: return "learner_reflection";
        case Role::situation: return "situation";
    }
    return "unknown";
}

Role role_from_name(const std::string& name) {
    for (Role role : {Role::planner, Role::integrator, Role::reflector, Role::answerer,
                      Role::evaluator, Role::learner_planning, Role::learner_reflection,
                      Role::situation}) {
        if (name == role_name(role)) {
            return role;
        }
    }
    throw Error(ErrorCode::invalid_argument, "unknown role tag: " + name);
}

void Usage::add(const ModelReply& reply) {
    prompt_tokens += reply.prompt_tokens;
    completion_tokens += reply.completion_tokens;
}

void Usage::add(const Usage& other) {
    prompt_tokens += other.prompt_tokens;
    completion_tokens += other.completion_tokens;
}

Usage usage_total(std::span<const ModelReply> replies) {
    Usage usage;
    for (const ModelReply& reply : replies) {
        usage.add(reply);
    }
    return usage;
}

// ---------------------------------------------------------------------------
// ScriptedProvider
// ---------------------------------------------------------------------------

ScriptedProvider ScriptedProvider::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw Error(ErrorCode::load_error, "fixture file must be a JSON object of role -> replies");
    }
    ScriptedProvider provider;
    for (const auto& [key, value] : doc.items()) {
        Role role = role_from_name(key);
        if (!value.is_array()) {
            throw Error(ErrorCode::load_error, "fixture replies for " + key + " must be an array");
        }
        for (const auto& reply : value) {
            provider.push(role, reply.get<std::string>());
        }
    }
    return provider;
}

ScriptedProvider ScriptedProvider::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::load_error, "cannot open fixture file " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::load_error, "fixture file " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

void ScriptedProvider::push(Role role, std::string reply) {
    queues_[role].push_back(std::move(reply));
}

std::size_t ScriptedProvider::remaining(Role role) const {
    auto queue = queues_.find(role);
    if (queue == queues_.end()) {
        return 0;
    }
    auto cursor = cursors_.find(role);
    std::size_t used = cursor == cursors_.end() ? 0 : cursor->second;
    return queue->second.size() - used;
}

ModelReply ScriptedProvider::complete(const ModelCall& call) {
    auto queue = queues_.find(call.role);
    std::size_t& cursor = cursors_[call.role];
    if (queue == queues_.end() || cursor >= queue->second.size()) {
        throw Error(ErrorCode::fixture_exhausted,
                    std::string("scripted replies exhausted for role ") + role_name(call.role));
    }
    ModelReply reply;
    reply.text = queue->second[cursor++];
    reply.prompt_tokens = count_tokens(call.system_prompt) + count_tokens(call.user_prompt);
    reply.completion_tokens = count_tokens(reply.text);
    return reply;
}

// ---------------------------------------------------------------------------
// RemoteChatProvider
// ---------------------------------------------------------------------------

RemoteChatProvider::RemoteChatProvider(RemoteChatConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
        throw Error(ErrorCode::invalid_config, "remote chat provider requires an endpoint");
    }
}

ModelReply RemoteChatProvider::complete(const ModelCall& call) {
    std::string model;
    auto by_role = config_.models.find(role_name(call.role));
    if (by_role != config_.models.end()) {
        model = by_role->second;
    } else if (auto fallback = config_.models.find("default"); fallback != config_.models.end()) {
        model = fallback->second;
    }

    nlohmann::json body = {
        {"model", model},
        {"temperature", call.temperature},
        {"messages",
         nlohmann::json::array({{{"role", "system"}, {"content", call.system_prompt}},
                                {{"role", "user"}, {"content", call.user_prompt}}})}};

    std::string api_key;
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
        api_key = key;
    }

    nlohmann::json reply;
    int attempt = 0;
    for (;;) {
        try {
            reply = http_post_json(config_.endpoint, body, api_key, config_.timeout_seconds);
            break;
        } catch (const Error& e) {
            ++attempt;
            if (attempt > config_.max_retries) {
                throw Error(ErrorCode::provider_error,
                            "chat call failed after " + std::to_string(attempt) + " attempts: " +
                                e.what());
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(100LL << attempt));
        }
    }

    if (!reply.contains("choices") || reply["choices"].empty()) {
        throw Error(ErrorCode::provider_error, "chat reply missing choices: " + reply.dump());
    }
    ModelReply out;
    out.text = reply["choices"][0].at("message").at("content").get<std::string>();
    if (reply.contains("usage")) {
        out.prompt_tokens = reply["usage"].value("prompt_tokens", 0u);
        out.completion_tokens = reply["usage"].value("completion_tokens", 0u);
    } else {
        out.prompt_tokens = count_tokens(call.system_prompt) + count_tokens(call.user_prompt);
        out.completion_tokens = count_tokens(out.text);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CallLog / Gateway
// ---------------------------------------------------------------------------

void CallLog::append(CallRecord record) {
    std::lock_guard<std::mutex> lock(mutex_);
    records_.push_back(std::move(record));
}

void CallLog::write_jsonl(const std::filesystem::path& path) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::load_error, "cannot open " + path.string() + " for writing");
    }
    for (const CallRecord& record : records_) {
        nlohmann::json line = {{"role", role_name(record.role)},
                               {"system_prompt", record.system_prompt},
                               {"user_prompt", record.user_prompt},
                               {"reply_text", record.reply_text},
                               {"prompt_tokens", record.prompt_tokens},
                               {"completion_tokens", record.completion_tokens}};
        out << line.dump() << "\n";
    }
}

Gateway::Gateway(ChatProvider& provider, CallLog* log, bool strict_json, double temperature)
    : provider_(&provider), log_(log), strict_json_(strict_json), temperature_(temperature) {}

ModelReply Gateway::complete(Role role, const std::string& system_prompt,
                             const std::string& user_prompt) {
    if (system_prompt.empty() || user_prompt.empty()) {
        throw Error(ErrorCode::invalid_argument, "prompts must be non-empty");
    }
    ModelCall call{role, system_prompt, user_prompt, temperature_};
    ModelReply reply = provider_->complete(call);
    if (reply.prompt_tokens == 0 && reply.completion_tokens == 0) {
        reply.prompt_tokens = count_tokens(system_prompt) + count_tokens(user_prompt);
        reply.completion_tokens = count_tokens(reply.text);
    }
    if (log_ != nullptr) {
        log_->append({role, system_prompt, user_prompt, reply.text, reply.prompt_tokens,
                      reply.completion_tokens});
    }
    return reply;
}

nlohmann::json Gateway::parse_reply(const std::string& text) const {
    return extract_json(text, strict_json_);
}

// ---------------------------------------------------------------------------
// extract_json
// ---------------------------------------------------------------------------

namespace {

// Returns one past the close of the balanced JSON value starting at `start`,
// or npos when unbalanced. Skips string contents and escapes.
std::size_t balanced_end(const std::string& text, std::size_t start) {
    char open = text[start];
    char close = open == '{' ? '}' : ']';
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == open) {
            ++depth;
        } else if (c == close) {
            --depth;
            if (depth == 0) {
                return i + 1;
            }
        }
    }
    return std::string::npos;
}

}  // namespace

nlohmann::json extract_json(const std::string& text, bool strict) {
    if (strict) {
        try {
            return nlohmann::json::parse(trim(text));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::malformed_output,
                        std::string("strict JSON parse failed: ") + e.what() + "; raw text: " + text);
        }
    }
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{' && text[i] != '[') {
            continue;
        }
        std::size_t end = balanced_end(text, i);
        if (end == std::string::npos) {
            continue;
        }
        try {
            return nlohmann::json::parse(text.substr(i, end - i));
        } catch (const nlohmann::json::exception&) {
            // fall through and try the next opening bracket
        }
    }
    throw Error(ErrorCode::malformed_output, "no parseable JSON found in: " + text);
}

}  // namespace memsearch
