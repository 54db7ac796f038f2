#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "memsearch/embedding.hpp"
#include "memsearch/harness.hpp"
#include "memsearch/llm_gateway.hpp"

namespace memsearch {

struct ProviderConfig {
    std::string type = "scripted";  // "scripted" | "remote"
    std::string fixture_file;
    std::string endpoint;
    std::map<std::string, std::string> models;  // role name -> model, "default" fallback
    std::string api_key_env = "MEMSEARCH_API_KEY";
    double temperature = 0.0;
    bool strict_json = false;
    int timeout_seconds = 60;
};

struct EmbedderConfig {
    std::string type = "hash";  // "hash" | "remote"
    std::size_t dimension = 256;
    std::string endpoint;
    std::string model;
    std::string api_key_env = "MEMSEARCH_API_KEY";
};

struct PathsConfig {
    std::filesystem::path corpus;
    std::filesystem::path store;
    std::filesystem::path qa;
    std::filesystem::path banks_dir;
    std::filesystem::path output_dir = "runs";
};

struct SplitConfig {
    double fraction = 0.1;
    std::string conversation;  // non-empty switches to conversation mode
};

// The one experiment manifest. Loaded from a hierarchical JSON file; CLI
// flags override individual fields.
struct RunConfig {
    PathsConfig paths;
    int k_low = 5;
    int k_high = 10;
    RetrievalConfig retrieval;            // k = 3, exp_weight = 3
    bool weighted_sampling = false;
    SearchConfig loop;                    // max_iterations = 5, limits 5/5
    ProviderConfig provider;
    EmbedderConfig embedder;
    SplitConfig split;
    std::uint64_t seed = 42;
    int jobs = 1;
    bool bleu_brevity_penalty = true;
    std::string run_name;

    // Rejects any value violating module invariants before any work starts.
    void validate() const;

    static RunConfig from_json(const nlohmann::json& doc);
    static RunConfig from_file(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    StageConfig stage_config() const;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config);
std::unique_ptr<ChatProvider> make_provider(const ProviderConfig& config);

}  // namespace memsearch
