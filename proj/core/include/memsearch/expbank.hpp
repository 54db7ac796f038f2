#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memsearch/embedding.hpp"
#include "memsearch/llm_gateway.hpp"
#include "memsearch/types.hpp"

namespace memsearch {

struct BankEntry {
    std::string entry_id;         // stable; defaults to source.key()
    std::string condition;
    std::string situation;
    std::string key_text;         // exactly condition + situation
    EmbeddingVector key_embedding;
    std::string experience_text;  // "IF ... THEN ..."
    StepModule kind = StepModule::planning;
    QualityLabel quality = QualityLabel::good;
    ExperienceSource source;
};

struct RetrievalConfig {
    std::size_t k = 3;
    double exp_weight = 3.0;
};

struct ScoredExperience {
    BankEntry entry;
    double similarity = 0.0;
    double weighted_score = 0.0;  // max(similarity, 0) ^ exp_weight
};

// Retrieval key context. Planning conditions are the current query verbatim;
// reflection conditions concatenate the original question and the temp
// memory text.
std::string build_condition(StepModule kind, const std::string& question,
                            const std::string& current_query, const std::string& memory_text);

// Situation-role model call abstracting a concrete condition into an
// entity-free description.
class SituationAbstractor {
public:
    explicit SituationAbstractor(Gateway& gateway) : gateway_(&gateway) {}

    std::string abstract(const std::string& condition, Usage* tally = nullptr);

private:
    Gateway* gateway_;
};

// One kind-segregated experience store. Append-only while accumulating,
// read-only during inference; entries keep insertion order and duplicate
// source keys replace the prior entry in place.
class ExperienceBank {
public:
    ExperienceBank(StepModule kind, std::string embedder_id, std::size_t dimension);

    StepModule kind() const { return kind_; }
    const std::string& embedder_id() const { return embedder_id_; }
    std::size_t dimension() const { return dimension_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::vector<BankEntry>& entries() const { return entries_; }
    const BankEntry* find(const std::string& entry_id) const;

    // Computes key_text and key_embedding when absent; the embedder must
    // match the bank header.
    void insert(BankEntry entry, const Embedder& embedder);

    // Ranks every entry by cosine(phi(condition+situation), key_embedding),
    // descending, ties by ascending entry_id, and returns at most cfg.k.
    // weighted_sampling instead draws k entries without replacement with
    // probabilities proportional to the weighted score.
    std::vector<ScoredExperience> retrieve_topk(const std::string& condition,
                                                const std::string& situation,
                                                const Embedder& embedder,
                                                const RetrievalConfig& cfg,
                                                bool weighted_sampling = false,
                                                std::uint64_t seed = 0) const;

    // JSON Lines, one entry per line, preceded by a header line
    // {dimension, embedder_id, format_version, kind}.
    void save(const std::filesystem::path& path) const;
    static ExperienceBank load(const std::filesystem::path& path);

    static constexpr int kFormatVersion = 1;

private:
    StepModule kind_;
    std::string embedder_id_;
    std::size_t dimension_ = 0;
    std::vector<BankEntry> entries_;
};

nlohmann::json bank_entry_to_json(const BankEntry& entry);
BankEntry bank_entry_from_json(const nlohmann::json& doc);

// Prompt rendering for one retrieved experience: quality tag plus text.
std::string render_experience(const BankEntry& entry);

}  // namespace memsearch
