#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace memsearch {

// One prompt template per role; the tag identifies which template produced
// a call, and keys scripted fixture queues.
enum class Role {
    planner,
    integrator,
    reflector,
    answerer,
    evaluator,
    learner_planning,
    learner_reflection,
    situation,
};

const char* role_name(Role role);
Role role_from_name(const std::string& name);

struct ModelCall {
    Role role = Role::planner;
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.0;
};

struct ModelReply {
    std::string text;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

struct Usage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;

    std::size_t total() const { return prompt_tokens + completion_tokens; }
    void add(const ModelReply& reply);
    void add(const Usage& other);
};

Usage usage_total(std::span<const ModelReply> replies);

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual ModelReply complete(const ModelCall& call) = 0;
};

// Replay provider for deterministic runs. Replies are consumed strictly in
// order per role; exhaustion is an error, not silent reuse. Token counts
// come from the accounting tokenizer.
class ScriptedProvider final : public ChatProvider {
public:
    ScriptedProvider() = default;

    // Fixture file: JSON map role name -> array of reply strings.
    static ScriptedProvider from_json(const nlohmann::json& doc);
    static ScriptedProvider from_file(const std::filesystem::path& path);

    void push(Role role, std::string reply);
    std::size_t remaining(Role role) const;

    ModelReply complete(const ModelCall& call) override;

private:
    std::map<Role, std::vector<std::string>> queues_;
    std::map<Role, std::size_t> cursors_;
};

struct RemoteChatConfig {
    std::string endpoint;                        // e.g. http://host:port/v1/chat/completions
    std::map<std::string, std::string> models;   // role name -> model; "default" as fallback
    std::string api_key_env = "MEMSEARCH_API_KEY";
    int timeout_seconds = 60;
    int max_retries = 3;                         // transport failures only
};

// OpenAI-style chat completions client with exponential backoff on
// transport failures. Provider-reported usage wins over accounting counts.
class RemoteChatProvider final : public ChatProvider {
public:
    explicit RemoteChatProvider(RemoteChatConfig config);

    ModelReply complete(const ModelCall& call) override;

private:
    RemoteChatConfig config_;
};

struct CallRecord {
    Role role = Role::planner;
    std::string system_prompt;
    std::string user_prompt;
    std::string reply_text;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

// Append-only audit log of every model call made through a Gateway.
class CallLog {
public:
    void append(CallRecord record);
    const std::vector<CallRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    void write_jsonl(const std::filesystem::path& path) const;

private:
    std::vector<CallRecord> records_;
    mutable std::mutex mutex_;
};

// Routes every model call through one provider, filling in accounting token
// counts when the provider reports none and mirroring calls to an optional
// CallLog.
class Gateway {
public:
    explicit Gateway(ChatProvider& provider, CallLog* log = nullptr, bool strict_json = false,
                     double temperature = 0.0);

    ModelReply complete(Role role, const std::string& system_prompt,
                        const std::string& user_prompt);

    // Applies the configured strictness to extract_json().
    nlohmann::json parse_reply(const std::string& text) const;
    bool strict_json() const { return strict_json_; }

private:
    ChatProvider* provider_;
    CallLog* log_;
    bool strict_json_ = false;
    double temperature_ = 0.0;
};

// Parses the first balanced top-level JSON object or array in text,
// tolerating surrounding prose and code fences. strict requires the whole
// (trimmed) text to be the JSON document. Throws malformed_output carrying
// the raw text when nothing parses.
nlohmann::json extract_json(const std::string& text, bool strict = false);

}  // namespace memsearch
