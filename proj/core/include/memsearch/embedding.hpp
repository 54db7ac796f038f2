#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace memsearch {

using EmbeddingVector = std::vector<double>;

double l2_norm(const EmbeddingVector& v);
void l2_normalize(EmbeddingVector& v);

// Standard cosine similarity. Returns 0 when either vector is all-zero so a
// degenerate abstraction never aborts a search; throws invalid_argument on
// dimension mismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
public:
    virtual ~Embedder() = default;

    // Must be deterministic for a fixed provider and input, and return an
    // L2-normalized vector of dimension().
    virtual EmbeddingVector embed(const std::string& text) const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string id() const = 0;
};

// Deterministic offline embedder. Each accounting token contributes
// sign / 1.0 at one component:
//   h     = fnv1a64(token)
//   index = h mod dim
//   sign  = -1 if bit 32 of h is set, else +1
// The accumulated bag is L2-normalized. Byte-identical across runs and
// platforms for the same input.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dim = 256);

    EmbeddingVector embed(const std::string& text) const override;
    std::size_t dimension() const override { return dim_; }
    std::string id() const override;

private:
    std::size_t dim_;
};

struct RemoteEmbedderConfig {
    std::string endpoint;
    std::string model;
    std::string api_key_env = "MEMSEARCH_API_KEY";
    std::size_t dimension = 1024;
    int timeout_seconds = 30;
};

// Embedding service client (OpenAI-style /embeddings payload). The reply
// vector is re-normalized locally to honor the embed() contract.
class RemoteEmbedder final : public Embedder {
public:
    explicit RemoteEmbedder(RemoteEmbedderConfig config);

    EmbeddingVector embed(const std::string& text) const override;
    std::size_t dimension() const override { return config_.dimension; }
    std::string id() const override;

private:
    RemoteEmbedderConfig config_;
};

}  // namespace memsearch
