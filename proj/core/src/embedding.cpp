#include "memsearch/embedding.hpp"

#include <cmath>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "memsearch/errors.hpp"
#include "memsearch/http.hpp"
#include "memsearch/text.hpp"

namespace memsearch {

double l2_norm(const EmbeddingVector& v) {
    double sum = 0.0;
    for (double x : v) {
        sum += x * x;
    }
    return std::sqrt(sum);
}

void l2_normalize(EmbeddingVector& v) {
    double norm = l2_norm(v);
    if (norm == 0.0) {
        return;
    }
    for (double& x : v) {
        x /= norm;
    }
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::invalid_argument,
                    "cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

HashEmbedder::HashEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) {
        throw Error(ErrorCode::invalid_argument, "hash embedder dimension must be positive");
    }
}

EmbeddingVector HashEmbedder::embed(const std::string& text) const {
    if (text.empty()) {
        throw Error(ErrorCode::invalid_argument, "embed: text must be non-empty");
    }
    EmbeddingVector v(dim_, 0.0);
    for (const std::string& token : tokenize(text)) {
        std::uint64_t h = fnv1a64(token);
        std::size_t index = static_cast<std::size_t>(h % dim_);
        double sign = ((h >> 32) & 1ULL) ? -1.0 : 1.0;
        v[index] += sign;
    }
    l2_normalize(v);
    return v;
}

std::string HashEmbedder::id() const {
    return "hash-" + std::to_string(dim_);
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
        throw Error(ErrorCode::invalid_config, "remote embedder requires an endpoint");
    }
}

EmbeddingVector RemoteEmbedder::embed(const std::string& text) const {
    if (text.empty()) {
        throw Error(ErrorCode::invalid_argument, "embed: text must be non-empty");
    }
    nlohmann::json body = {{"model", config_.model}, {"input", nlohmann::json::array({text})}};

    std::string api_key;
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
        api_key = key;
    }

    nlohmann::json reply = http_post_json(config_.endpoint, body, api_key, config_.timeout_seconds);
    if (!reply.contains("data") || !reply["data"].is_array() || reply["data"].empty() ||
        !reply["data"][0].contains("embedding")) {
        throw Error(ErrorCode::provider_error,
                    "embedding reply missing data[0].embedding: " + reply.dump());
    }
    EmbeddingVector v = reply["data"][0]["embedding"].get<EmbeddingVector>();
    if (v.size() != config_.dimension) {
        throw Error(ErrorCode::provider_error,
                    "embedding dimension " + std::to_string(v.size()) + " does not match configured " +
                        std::to_string(config_.dimension));
    }
    l2_normalize(v);
    return v;
}

std::string RemoteEmbedder::id() const {
    return "remote-" + config_.model + "-" + std::to_string(config_.dimension);
}

}  // namespace memsearch
