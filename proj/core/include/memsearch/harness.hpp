#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memsearch/deepsearch.hpp"
#include "memsearch/evaluator.hpp"
#include "memsearch/learner.hpp"
#include "memsearch/memstore.hpp"

namespace memsearch {

struct QAItem {
    std::string item_id;
    std::string question;
    std::string reference_answer;
    std::optional<int> category;  // 1 multi-hop, 2 temporal, 3 open-domain, 4 single-hop
    std::string conversation_id;
};

std::vector<QAItem> parse_qa_items(const nlohmann::json& doc);
std::vector<QAItem> load_qa_items(const std::filesystem::path& path);

// Conversation corpus: conversations -> sessions -> turns. Pages are cut at
// session-turn boundaries, capped at kPageTokenCap accounting tokens.
std::vector<RawPage> pages_from_conversations(const nlohmann::json& doc);

// Document-QA corpus: items carry their own documents; documents are
// chunked at the same token cap. Returns pages plus the extracted QA items.
struct DocQaDataset {
    std::vector<RawPage> pages;
    std::vector<QAItem> items;
};
DocQaDataset parse_docqa(const nlohmann::json& doc);

inline constexpr std::size_t kPageTokenCap = 512;

struct SplitResult {
    std::vector<QAItem> accumulation;
    std::vector<QAItem> evaluation;
};

// Seeded Fisher-Yates shuffle, then the first floor(n * fraction) items
// accumulate. Either side empty raises invalid_split.
SplitResult split_accumulation(std::vector<QAItem> items, double fraction, std::uint64_t seed);

// Designated-conversation mode: the accumulation set is every item of one
// conversation.
SplitResult split_by_conversation(std::vector<QAItem> items, const std::string& conversation_id);

struct StageConfig {
    SearchConfig search;
    AccumulateConfig thresholds;
    bool bleu_brevity_penalty = true;
    int jobs = 1;
};

struct OfflineStageResult {
    explicit OfflineStageResult(Banks initial_banks) : banks(std::move(initial_banks)) {}

    Banks banks;
    std::size_t items_total = 0;
    std::size_t items_failed = 0;
    std::size_t trajectories = 0;
    std::size_t reports = 0;
    std::map<std::pair<StepModule, QualityLabel>, std::size_t> experience_counts;
    std::size_t distillation_failures = 0;
    Usage trajectory_usage;
    Usage evaluator_usage;
    Usage learner_usage;
    std::vector<std::string> item_errors;
};

nlohmann::json offline_report_to_json(const OfflineStageResult& result);

// Accumulation stage: per item, run the plain search loop, judge the
// trajectory, distill passing steps into bank additions. Per-item failures
// are logged and skipped; zero resulting experiences fails the stage.
OfflineStageResult run_offline_stage(const std::vector<QAItem>& items, const MemoryStore& store,
                                     const Embedder& embedder, Gateway& gateway,
                                     const StageConfig& config);

struct ItemResult {
    std::string item_id;
    std::optional<int> category;
    std::string prediction;
    double f1 = 0.0;
    double bleu = 0.0;
    std::size_t iterations = 0;
    std::size_t tokens = 0;
    bool failed = false;
    std::string error;
};

struct CategoryStats {
    std::size_t count = 0;
    double f1 = 0.0;    // mean over the category's items
    double bleu = 0.0;
};

struct EvalReport {
    std::vector<ItemResult> items;
    std::map<int, CategoryStats> per_category;  // key 0 = uncategorized
    double overall_f1 = 0.0;    // question-weighted means
    double overall_bleu = 0.0;
    double mean_tokens = 0.0;
    double mean_iterations = 0.0;
};

nlohmann::json eval_report_to_json(const EvalReport& report);
std::string eval_report_table(const EvalReport& report);

// Per-trajectory sink, e.g. for writing logs; called in item order.
using TrajectorySink = std::function<void(const QAItem&, const Trajectory&)>;

// Evaluation stage: one experience-augmented search per item (plain loop
// when banks is null or empty). Failed items score 0 and stay in the means.
EvalReport run_online_stage(const std::vector<QAItem>& items, const MemoryStore& store,
                            const Embedder& embedder, Gateway& gateway, const Banks* banks,
                            const StageConfig& config, const TrajectorySink& sink = nullptr);

}  // namespace memsearch
