#include "memsearch/config.hpp"

#include <fstream>

#include "memsearch/errors.hpp"

namespace memsearch {

void RunConfig::validate() const {
    if (k_low < 0 || k_high > 12 || k_low > k_high) {
        throw Error(ErrorCode::invalid_config,
                    "thresholds must satisfy 0 <= k_low <= k_high <= 12; got (" +
                        std::to_string(k_low) + ", " + std::to_string(k_high) + ")");
    }
    if (retrieval.k == 0) {
        throw Error(ErrorCode::invalid_config, "retrieval.k must be at least 1");
    }
    if (retrieval.exp_weight <= 0.0) {
        throw Error(ErrorCode::invalid_config, "retrieval.exp_weight must be positive");
    }
    if (loop.max_iterations == 0) {
        throw Error(ErrorCode::invalid_config, "loop.max_iterations must be at least 1");
    }
    if (provider.type != "scripted" && provider.type != "remote") {
        throw Error(ErrorCode::invalid_config, "provider.type must be scripted or remote");
    }
    if (provider.type == "scripted" && provider.fixture_file.empty()) {
        throw Error(ErrorCode::invalid_config, "scripted provider needs a fixture_file");
    }
    if (provider.type == "remote" && provider.endpoint.empty()) {
        throw Error(ErrorCode::invalid_config, "remote provider needs an endpoint");
    }
    if (provider.temperature < 0.0) {
        throw Error(ErrorCode::invalid_config, "temperature must be >= 0");
    }
    if (embedder.type != "hash" && embedder.type != "remote") {
        throw Error(ErrorCode::invalid_config, "embedder.type must be hash or remote");
    }
    if (embedder.dimension == 0) {
        throw Error(ErrorCode::invalid_config, "embedder.dimension must be positive");
    }
    if (embedder.type == "remote" && embedder.endpoint.empty()) {
        throw Error(ErrorCode::invalid_config, "remote embedder needs an endpoint");
    }
    if (split.fraction <= 0.0 || split.fraction >= 1.0) {
        throw Error(ErrorCode::invalid_config, "split.fraction must lie strictly in (0, 1)");
    }
    if (jobs < 1) {
        throw Error(ErrorCode::invalid_config, "jobs must be at least 1");
    }
}

RunConfig RunConfig::from_json(const nlohmann::json& doc) {
    RunConfig config;
    if (doc.contains("paths")) {
        const auto& paths = doc["paths"];
        config.paths.corpus = paths.value("corpus", std::string{});
        config.paths.store = paths.value("store", std::string{});
        config.paths.qa = paths.value("qa", std::string{});
        config.paths.banks_dir = paths.value("banks_dir", std::string{});
        config.paths.output_dir = paths.value("output_dir", std::string{"runs"});
    }
    if (doc.contains("thresholds")) {
        config.k_low = doc["thresholds"].value("k_low", config.k_low);
        config.k_high = doc["thresholds"].value("k_high", config.k_high);
    }
    if (doc.contains("retrieval")) {
        const auto& retrieval = doc["retrieval"];
        config.retrieval.k = retrieval.value("k", config.retrieval.k);
        config.retrieval.exp_weight = retrieval.value("exp_weight", config.retrieval.exp_weight);
        config.weighted_sampling = retrieval.value("weighted_sampling", config.weighted_sampling);
    }
    if (doc.contains("loop")) {
        const auto& loop = doc["loop"];
        config.loop.max_iterations = loop.value("max_iterations", config.loop.max_iterations);
        config.loop.limits.keyword = loop.value("keyword_limit", config.loop.limits.keyword);
        config.loop.limits.semantic = loop.value("semantic_limit", config.loop.limits.semantic);
    }
    if (doc.contains("provider")) {
        const auto& provider = doc["provider"];
        config.provider.type = provider.value("type", config.provider.type);
        config.provider.fixture_file = provider.value("fixture_file", config.provider.fixture_file);
        config.provider.endpoint = provider.value("endpoint", config.provider.endpoint);
        config.provider.api_key_env = provider.value("api_key_env", config.provider.api_key_env);
        config.provider.temperature = provider.value("temperature", config.provider.temperature);
        config.provider.strict_json = provider.value("strict_json", config.provider.strict_json);
        config.provider.timeout_seconds =
            provider.value("timeout_seconds", config.provider.timeout_seconds);
        if (provider.contains("models")) {
            config.provider.models =
                provider["models"].get<std::map<std::string, std::string>>();
        }
    }
    if (doc.contains("embedder")) {
        const auto& embedder = doc["embedder"];
        config.embedder.type = embedder.value("type", config.embedder.type);
        config.embedder.dimension = embedder.value("dimension", config.embedder.dimension);
        config.embedder.endpoint = embedder.value("endpoint", config.embedder.endpoint);
        config.embedder.model = embedder.value("model", config.embedder.model);
        config.embedder.api_key_env = embedder.value("api_key_env", config.embedder.api_key_env);
    }
    if (doc.contains("split")) {
        config.split.fraction = doc["split"].value("fraction", config.split.fraction);
        config.split.conversation = doc["split"].value("conversation", config.split.conversation);
    }
    config.seed = doc.value("seed", config.seed);
    config.jobs = doc.value("jobs", config.jobs);
    config.bleu_brevity_penalty = doc.value("bleu_brevity_penalty", config.bleu_brevity_penalty);
    config.run_name = doc.value("run_name", config.run_name);

    config.loop.retrieval = config.retrieval;
    config.loop.weighted_sampling = config.weighted_sampling;
    config.loop.seed = config.seed;
    return config;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::invalid_config, "cannot open config file " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::invalid_config, "config file " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

nlohmann::json RunConfig::to_json() const {
    return {{"paths",
             {{"corpus", paths.corpus.string()},
              {"store", paths.store.string()},
              {"qa", paths.qa.string()},
              {"banks_dir", paths.banks_dir.string()},
              {"output_dir", paths.output_dir.string()}}},
            {"thresholds", {{"k_low", k_low}, {"k_high", k_high}}},
            {"retrieval",
             {{"k", retrieval.k},
              {"exp_weight", retrieval.exp_weight},
              {"weighted_sampling", weighted_sampling}}},
            {"loop",
             {{"max_iterations", loop.max_iterations},
              {"keyword_limit", loop.limits.keyword},
              {"semantic_limit", loop.limits.semantic}}},
            {"provider",
             {{"type", provider.type},
              {"fixture_file", provider.fixture_file},
              {"endpoint", provider.endpoint},
              {"models", provider.models},
              {"api_key_env", provider.api_key_env},
              {"temperature", provider.temperature},
              {"strict_json", provider.strict_json},
              {"timeout_seconds", provider.timeout_seconds}}},
            {"embedder",
             {{"type", embedder.type},
              {"dimension", embedder.dimension},
              {"endpoint", embedder.endpoint},
              {"model", embedder.model},
              {"api_key_env", embedder.api_key_env}}},
            {"split", {{"fraction", split.fraction}, {"conversation", split.conversation}}},
            {"seed", seed},
            {"jobs", jobs},
            {"bleu_brevity_penalty", bleu_brevity_penalty},
            {"run_name", run_name}};
}

StageConfig RunConfig::stage_config() const {
    StageConfig stage;
    stage.search = loop;
    stage.search.retrieval = retrieval;
    stage.search.weighted_sampling = weighted_sampling;
    stage.search.seed = seed;
    stage.thresholds = {k_low, k_high};
    stage.bleu_brevity_penalty = bleu_brevity_penalty;
    // scripted cursors are single-run state, so parallelism is forced off
    stage.jobs = provider.type == "scripted" ? 1 : jobs;
    return stage;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config) {
    if (config.type == "hash") {
        return std::make_unique<HashEmbedder>(config.dimension);
    }
    RemoteEmbedderConfig remote;
    remote.endpoint = config.endpoint;
    remote.model = config.model;
    remote.api_key_env = config.api_key_env;
    remote.dimension = config.dimension;
    return std::make_unique<RemoteEmbedder>(remote);
}

std::unique_ptr<ChatProvider> make_provider(const ProviderConfig& config) {
    if (config.type == "scripted") {
        return std::make_unique<ScriptedProvider>(
            ScriptedProvider::from_file(config.fixture_file));
    }
    RemoteChatConfig remote;
    remote.endpoint = config.endpoint;
    remote.models = config.models;
    remote.api_key_env = config.api_key_env;
    remote.timeout_seconds = config.timeout_seconds;
    return std::make_unique<RemoteChatProvider>(remote);
}

}  // namespace memsearch
