#include "memsearch/expbank.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "memsearch/errors.hpp"
#include "memsearch/prompts.hpp"
#include "memsearch/text.hpp"

namespace memsearch {

std::string build_condition(StepModule kind, const std::string& question,
                            const std::string& current_query, const std::string& memory_text) {
    if (kind == StepModule::planning) {
        // the current query context, verbatim
        return current_query;
    }
    return question + "\n" + memory_text;
}

std::string SituationAbstractor::abstract(const std::string& condition, Usage* tally) {
    if (condition.empty()) {
        throw Error(ErrorCode::invalid_argument, "condition must be non-empty");
    }
    ModelReply reply = gateway_->complete(Role::situation, prompts::situation_system(),
                                          prompts::situation_user(condition));
    if (tally != nullptr) {
        tally->add(reply);
    }
    std::string situation = trim(reply.text);
    if (situation.empty()) {
        throw Error(ErrorCode::abstraction_failed, "situation model returned an empty abstraction");
    }
    return situation;
}

ExperienceBank::ExperienceBank(StepModule kind, std::string embedder_id, std::size_t dimension)
    : kind_(kind), embedder_id_(std::move(embedder_id)), dimension_(dimension) {}

const BankEntry* ExperienceBank::find(const std::string& entry_id) const {
    for (const BankEntry& entry : entries_) {
        if (entry.entry_id == entry_id) {
            return &entry;
        }
    }
    return nullptr;
}

void ExperienceBank::insert(BankEntry entry, const Embedder& embedder) {
    if (entry.kind != kind_) {
        throw Error(ErrorCode::invalid_insert,
                    std::string("cannot insert a ") + module_kind_tag(entry.kind) +
                        "-entry into the " + module_kind_tag(kind_) + " bank");
    }
    if (embedder.id() != embedder_id_ || embedder.dimension() != dimension_) {
        throw Error(ErrorCode::invalid_insert, "embedder " + embedder.id() +
                                                   " does not match bank header " + embedder_id_);
    }
    if (entry.entry_id.empty()) {
        entry.entry_id = entry.source.key();
    }
    entry.key_text = entry.condition + entry.situation;
    entry.key_embedding = embedder.embed(entry.key_text);

    // duplicate source keys replace the prior entry in place
    for (BankEntry& existing : entries_) {
        if (existing.source.key() == entry.source.key()) {
            existing = std::move(entry);
            return;
        }
    }
    entries_.push_back(std::move(entry));
}

std::vector<ScoredExperience> ExperienceBank::retrieve_topk(const std::string& condition,
                                                            const std::string& situation,
                                                            const Embedder& embedder,
                                                            const RetrievalConfig& cfg,
                                                            bool weighted_sampling,
                                                            std::uint64_t seed) const {
    if (cfg.k == 0 || entries_.empty()) {
        return {};
    }
    EmbeddingVector query = embedder.embed(condition + situation);

    struct Ranked {
        std::size_t index;
        double similarity;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        ranked.push_back({i, cosine(query, entries_[i].key_embedding)});
    }
    std::sort(ranked.begin(), ranked.end(), [this](const Ranked& a, const Ranked& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return entries_[a.index].entry_id < entries_[b.index].entry_id;
    });

    auto weight_of = [&cfg](double similarity) {
        return std::pow(std::max(similarity, 0.0), cfg.exp_weight);
    };

    std::vector<ScoredExperience> selected;
    if (!weighted_sampling) {
        std::size_t take = std::min(cfg.k, ranked.size());
        selected.reserve(take);
        for (std::size_t i = 0; i < take; ++i) {
            selected.push_back(
                {entries_[ranked[i].index], ranked[i].similarity, weight_of(ranked[i].similarity)});
        }
        return selected;
    }

    // Sampling mode: draw without replacement with probabilities
    // proportional to the weighted score; zero-weight entries fall back to
    // rank order once the positive mass is exhausted.
    std::mt19937_64 rng(seed);
    std::vector<Ranked> pool = ranked;
    while (selected.size() < cfg.k && !pool.empty()) {
        double total = 0.0;
        for (const Ranked& r : pool) {
            total += weight_of(r.similarity);
        }
        std::size_t picked = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> dist(0.0, total);
            double target = dist(rng);
            double cumulative = 0.0;
            for (std::size_t i = 0; i < pool.size(); ++i) {
                cumulative += weight_of(pool[i].similarity);
                if (target <= cumulative) {
                    picked = i;
                    break;
                }
            }
        }
        selected.push_back({entries_[pool[picked].index], pool[picked].similarity,
                            weight_of(pool[picked].similarity)});
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(picked));
    }
    return selected;
}

nlohmann::json bank_entry_to_json(const BankEntry& entry) {
    return {{"entry_id", entry.entry_id},
            {"condition", entry.condition},
            {"situation", entry.situation},
            {"key_text", entry.key_text},
            {"key_embedding", entry.key_embedding},
            {"experience", entry.experience_text},
            {"kind", module_kind_tag(entry.kind)},
            {"quality", quality_name(entry.quality)},
            {"source",
             {{"trajectory_id", entry.source.trajectory_id},
              {"step_index", entry.source.step_index},
              {"module", module_name(entry.source.module)},
              {"total", entry.source.total}}}};
}

BankEntry bank_entry_from_json(const nlohmann::json& doc) {
    BankEntry entry;
    entry.entry_id = doc.at("entry_id").get<std::string>();
    entry.condition = doc.at("condition").get<std::string>();
    entry.situation = doc.at("situation").get<std::string>();
    entry.key_text = doc.at("key_text").get<std::string>();
    entry.key_embedding = doc.at("key_embedding").get<EmbeddingVector>();
    entry.experience_text = doc.at("experience").get<std::string>();
    entry.kind = module_from_kind_tag(doc.at("kind").get<std::string>());
    entry.quality = quality_from_name(doc.at("quality").get<std::string>());
    const auto& source = doc.at("source");
    entry.source.trajectory_id = source.at("trajectory_id").get<std::string>();
    entry.source.step_index = source.at("step_index").get<std::size_t>();
    entry.source.module = module_from_name(source.at("module").get<std::string>());
    entry.source.total = source.at("total").get<int>();
    if (entry.key_text != entry.condition + entry.situation) {
        throw Error(ErrorCode::load_error,
                    "entry " + entry.entry_id + ": key_text is not condition + situation");
    }
    return entry;
}

void ExperienceBank::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::load_error, "cannot open " + path.string() + " for writing");
    }
    nlohmann::json header = {{"format_version", kFormatVersion},
                             {"embedder_id", embedder_id_},
                             {"dimension", dimension_},
                             {"kind", module_kind_tag(kind_)}};
    out << header.dump() << "\n";
    for (const BankEntry& entry : entries_) {
        out << bank_entry_to_json(entry).dump() << "\n";
    }
}

ExperienceBank ExperienceBank::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::load_error, "cannot open bank file " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorCode::load_error, path.string() + ": line 1: missing header");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::load_error, path.string() + ": line 1: " + e.what());
    }
    if (header.value("format_version", 0) != kFormatVersion) {
        throw Error(ErrorCode::load_error,
                    path.string() + ": line 1: unsupported format_version " +
                        std::to_string(header.value("format_version", 0)));
    }
    ExperienceBank bank(module_from_kind_tag(header.at("kind").get<std::string>()),
                        header.at("embedder_id").get<std::string>(),
                        header.at("dimension").get<std::size_t>());

    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) {
            continue;
        }
        BankEntry entry;
        try {
            entry = bank_entry_from_json(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::load_error,
                        path.string() + ": line " + std::to_string(line_number) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(ErrorCode::load_error,
                        path.string() + ": line " + std::to_string(line_number) + ": " + e.what());
        }
        if (entry.kind != bank.kind_) {
            throw Error(ErrorCode::load_error,
                        path.string() + ": line " + std::to_string(line_number) +
                            ": entry kind does not match bank header");
        }
        if (entry.key_embedding.size() != bank.dimension_) {
            throw Error(ErrorCode::load_error,
                        path.string() + ": line " + std::to_string(line_number) +
                            ": embedding dimension mismatch");
        }
        bank.entries_.push_back(std::move(entry));
    }
    return bank;
}

std::string render_experience(const BankEntry& entry) {
    const char* tag = entry.quality == QualityLabel::good ? "[from a successful step]"
                                                          : "[from a failed step]";
    return std::string(tag) + " " + entry.experience_text;
}

}  // namespace memsearch
