#include "memsearch/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

#include "memsearch/errors.hpp"
#include "memsearch/metrics.hpp"
#include "memsearch/text.hpp"

namespace memsearch {

// ---------------------------------------------------------------------------
// Dataset ingestion
// ---------------------------------------------------------------------------

std::vector<QAItem> parse_qa_items(const nlohmann::json& doc) {
    const nlohmann::json* array = &doc;
    if (doc.is_object() && doc.contains("items")) {
        array = &doc["items"];
    }
    if (!array->is_array()) {
        throw Error(ErrorCode::load_error, "QA file must be a JSON array of items");
    }
    std::vector<QAItem> items;
    for (std::size_t i = 0; i < array->size(); ++i) {
        const auto& record = (*array)[i];
        QAItem item;
        item.item_id = record.value("item_id", "q" + std::to_string(i));
        item.question = record.value("question", std::string{});
        item.reference_answer = record.value("answer", std::string{});
        if (record.contains("category") && record["category"].is_number_integer()) {
            item.category = record["category"].get<int>();
        }
        item.conversation_id = record.value("conversation_id", std::string{});
        if (item.question.empty() || item.reference_answer.empty()) {
            throw Error(ErrorCode::load_error,
                        "QA item " + item.item_id + " needs a non-empty question and answer");
        }
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<QAItem> load_qa_items(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::load_error, "cannot open QA file " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::load_error, "QA file " + path.string() + ": " + e.what());
    }
    return parse_qa_items(doc);
}

namespace {

// Packs whitespace-delimited words into chunks of at most `cap` accounting
// tokens, never splitting inside a word.
std::vector<std::string> chunk_text(const std::string& text, std::size_t cap) {
    std::istringstream in(text);
    std::vector<std::string> chunks;
    std::string word;
    std::string current;
    std::size_t current_tokens = 0;
    while (in >> word) {
        std::size_t cost = count_tokens(word);
        if (current_tokens > 0 && current_tokens + cost > cap) {
            chunks.push_back(current);
            current.clear();
            current_tokens = 0;
        }
        if (!current.empty()) {
            current += " ";
        }
        current += word;
        current_tokens += cost;
    }
    if (!current.empty()) {
        chunks.push_back(current);
    }
    return chunks;
}

}  // namespace

std::vector<RawPage> pages_from_conversations(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("conversations")) {
        throw Error(ErrorCode::load_error, "conversation corpus needs a \"conversations\" array");
    }
    std::vector<RawPage> pages;
    for (const auto& conversation : doc["conversations"]) {
        std::string conversation_id = conversation.value("conversation_id", std::string{});
        for (const auto& session : conversation.value("sessions", nlohmann::json::array())) {
            std::string label = session.value("session_label", std::string{});
            std::string timestamp = session.value("timestamp", std::string{});
            std::string header;
            if (!label.empty() || !timestamp.empty()) {
                header = "[" + label;
                if (!timestamp.empty()) {
                    header += (label.empty() ? "" : " @ ") + timestamp;
                }
                header += "]";
            }
            std::size_t header_tokens = count_tokens(header);

            auto flush = [&](std::string& body, std::size_t& tokens) {
                if (body.empty()) {
                    return;
                }
                RawPage page;
                page.source_id = conversation_id;
                page.session_label = label;
                page.text = header.empty() ? body : header + "\n" + body;
                pages.push_back(std::move(page));
                body.clear();
                tokens = 0;
            };

            std::string body;
            std::size_t body_tokens = 0;
            for (const auto& turn : session.value("turns", nlohmann::json::array())) {
                std::string line = turn.value("speaker", std::string{});
                if (!line.empty()) {
                    line += ": ";
                }
                line += turn.value("text", std::string{});
                // oversized single turns are word-chunked into their own pages
                for (const std::string& piece : chunk_text(line, kPageTokenCap)) {
                    std::size_t cost = count_tokens(piece);
                    if (body_tokens > 0 && header_tokens + body_tokens + cost > kPageTokenCap) {
                        flush(body, body_tokens);
                    }
                    if (!body.empty()) {
                        body += "\n";
                    }
                    body += piece;
                    body_tokens += cost;
                }
            }
            flush(body, body_tokens);
        }
    }
    return pages;
}

DocQaDataset parse_docqa(const nlohmann::json& doc) {
    const nlohmann::json* array = &doc;
    if (doc.is_object() && doc.contains("items")) {
        array = &doc["items"];
    }
    if (!array->is_array()) {
        throw Error(ErrorCode::load_error, "document-QA file must be a JSON array of items");
    }
    DocQaDataset dataset;
    for (std::size_t i = 0; i < array->size(); ++i) {
        const auto& record = (*array)[i];
        QAItem item;
        item.item_id = record.value("item_id", "q" + std::to_string(i));
        item.question = record.value("question", std::string{});
        item.reference_answer = record.value("answer", std::string{});
        if (record.contains("category") && record["category"].is_number_integer()) {
            item.category = record["category"].get<int>();
        }
        if (item.question.empty() || item.reference_answer.empty()) {
            throw Error(ErrorCode::load_error,
                        "document-QA item " + item.item_id + " needs a question and answer");
        }
        std::size_t doc_index = 0;
        for (const auto& document : record.value("documents", nlohmann::json::array())) {
            for (const std::string& chunk :
                 chunk_text(document.get<std::string>(), kPageTokenCap)) {
                RawPage page;
                page.source_id = item.item_id + "/doc" + std::to_string(doc_index);
                page.text = chunk;
                dataset.pages.push_back(std::move(page));
            }
            ++doc_index;
        }
        dataset.items.push_back(std::move(item));
    }
    return dataset;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

SplitResult split_accumulation(std::vector<QAItem> items, double fraction, std::uint64_t seed) {
    if (fraction <= 0.0 || fraction >= 1.0) {
        throw Error(ErrorCode::invalid_split,
                    "fraction must lie strictly between 0 and 1; got " + std::to_string(fraction));
    }
    // hand-rolled Fisher-Yates so the split is stable across toolchains
    std::mt19937_64 rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(items[i - 1], items[j]);
    }
    std::size_t take = static_cast<std::size_t>(
        std::floor(static_cast<double>(items.size()) * fraction));
    if (take == 0 || take >= items.size()) {
        throw Error(ErrorCode::invalid_split,
                    "split leaves an empty side (" + std::to_string(take) + " of " +
                        std::to_string(items.size()) + " items)");
    }
    SplitResult result;
    result.accumulation.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(take));
    result.evaluation.assign(items.begin() + static_cast<std::ptrdiff_t>(take), items.end());
    return result;
}

SplitResult split_by_conversation(std::vector<QAItem> items, const std::string& conversation_id) {
    SplitResult result;
    for (QAItem& item : items) {
        if (item.conversation_id == conversation_id) {
            result.accumulation.push_back(std::move(item));
        } else {
            result.evaluation.push_back(std::move(item));
        }
    }
    if (result.accumulation.empty() || result.evaluation.empty()) {
        throw Error(ErrorCode::invalid_split,
                    "conversation split on \"" + conversation_id + "\" leaves an empty side");
    }
    return result;
}

// ---------------------------------------------------------------------------
// Offline stage
// ---------------------------------------------------------------------------

OfflineStageResult run_offline_stage(const std::vector<QAItem>& items, const MemoryStore& store,
                                     const Embedder& embedder, Gateway& gateway,
                                     const StageConfig& config) {
    OfflineStageResult result(
        Banks{ExperienceBank(StepModule::planning, embedder.id(), embedder.dimension()),
              ExperienceBank(StepModule::reflection, embedder.id(), embedder.dimension())});
    result.items_total = items.size();

    DeepSearchEngine engine(gateway, store, embedder);
    TrajectoryEvaluator evaluator(gateway);
    ReflectionLearner learner(gateway);

    std::vector<Trajectory> trajectories;
    std::vector<std::vector<RubricReport>> reports;
    std::vector<std::string> questions;
    for (const QAItem& item : items) {
        try {
            Trajectory trajectory = engine.run(item.question, nullptr, config.search, item.item_id);
            result.trajectory_usage.add(trajectory.usage);
            std::vector<RubricReport> item_reports = evaluator.evaluate(
                trajectory, item.question, item.reference_answer, &result.evaluator_usage);
            result.reports += item_reports.size();
            ++result.trajectories;
            trajectories.push_back(std::move(trajectory));
            reports.push_back(std::move(item_reports));
            questions.push_back(item.question);
        } catch (const Error& e) {
            ++result.items_failed;
            result.item_errors.push_back(item.item_id + ": " + e.what());
        }
    }

    AccumulateResult additions =
        learner.accumulate(trajectories, reports, questions, config.thresholds);
    result.learner_usage = additions.usage;
    result.experience_counts = additions.counts;
    result.distillation_failures = additions.failures.size();
    for (const std::string& failure : additions.failures) {
        result.item_errors.push_back(failure);
    }

    auto find_trajectory = [&trajectories](const std::string& id) -> const Trajectory& {
        for (const Trajectory& t : trajectories) {
            if (t.question_id == id) {
                return t;
            }
        }
        throw Error(ErrorCode::invalid_argument, "experience references unknown trajectory " + id);
    };

    auto insert_all = [&](const std::vector<DistilledExperience>& experiences,
                          ExperienceBank& bank) {
        for (const DistilledExperience& exp : experiences) {
            const Trajectory& trajectory = find_trajectory(exp.source.trajectory_id);
            const Step& step = trajectory.steps.at(exp.source.step_index);
            std::string condition = build_condition(exp.kind, trajectory.question, step.query,
                                                    step.memory_after.text);
            bank.insert(make_bank_entry(exp, condition, embedder), embedder);
        }
    };
    insert_all(additions.planning, result.banks.planning);
    insert_all(additions.reflection, result.banks.reflection);

    if (result.banks.planning.empty() && result.banks.reflection.empty()) {
        throw Error(ErrorCode::stage_failed,
                    "accumulation produced zero experiences over " +
                        std::to_string(items.size()) + " items");
    }
    return result;
}

nlohmann::json offline_report_to_json(const OfflineStageResult& result) {
    auto count = [&result](StepModule kind, QualityLabel quality) -> std::size_t {
        auto it = result.experience_counts.find({kind, quality});
        return it == result.experience_counts.end() ? 0 : it->second;
    };
    auto usage_json = [](const Usage& usage) -> nlohmann::json {
        return {{"prompt_tokens", usage.prompt_tokens},
                {"completion_tokens", usage.completion_tokens},
                {"total_tokens", usage.total()}};
    };
    return {{"items_total", result.items_total},
            {"items_failed", result.items_failed},
            {"trajectories", result.trajectories},
            {"reports", result.reports},
            {"experiences",
             {{"planning",
               {{"good", count(StepModule::planning, QualityLabel::good)},
                {"bad", count(StepModule::planning, QualityLabel::bad)}}},
              {"reflection",
               {{"good", count(StepModule::reflection, QualityLabel::good)},
                {"bad", count(StepModule::reflection, QualityLabel::bad)}}}}},
            {"distillation_failures", result.distillation_failures},
            {"usage",
             {{"trajectory", usage_json(result.trajectory_usage)},
              {"evaluator", usage_json(result.evaluator_usage)},
              {"learner", usage_json(result.learner_usage)}}},
            {"errors", result.item_errors}};
}

// ---------------------------------------------------------------------------
// Online stage
// ---------------------------------------------------------------------------

EvalReport run_online_stage(const std::vector<QAItem>& items, const MemoryStore& store,
                            const Embedder& embedder, Gateway& gateway, const Banks* banks,
                            const StageConfig& config, const TrajectorySink& sink) {
    EvalReport report;
    report.items.resize(items.size());
    std::vector<std::optional<Trajectory>> trajectories(items.size());

    auto process = [&](std::size_t index) {
        const QAItem& item = items[index];
        ItemResult& row = report.items[index];
        row.item_id = item.item_id;
        row.category = item.category;
        DeepSearchEngine engine(gateway, store, embedder);
        try {
            Trajectory trajectory = engine.run(item.question, banks, config.search, item.item_id);
            row.prediction = trajectory.answer;
            row.f1 = token_f1(trajectory.answer, item.reference_answer);
            row.bleu = bleu1(trajectory.answer, item.reference_answer, config.bleu_brevity_penalty);
            row.iterations = trajectory.steps.size();
            row.tokens = trajectory.usage.total();
            trajectories[index] = std::move(trajectory);
        } catch (const Error& e) {
            row.failed = true;
            row.error = e.what();  // scores stay 0 and the item stays in the means
        }
    };

    int jobs = std::max(1, config.jobs);
    if (jobs == 1 || items.size() < 2) {
        for (std::size_t i = 0; i < items.size(); ++i) {
            process(i);
        }
    } else {
        std::vector<std::thread> workers;
        std::size_t stride = static_cast<std::size_t>(jobs);
        for (std::size_t w = 0; w < stride; ++w) {
            workers.emplace_back([&, w]() {
                for (std::size_t i = w; i < items.size(); i += stride) {
                    process(i);
                }
            });
        }
        for (std::thread& worker : workers) {
            worker.join();
        }
    }

    if (sink) {
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (trajectories[i].has_value()) {
                sink(items[i], *trajectories[i]);
            }
        }
    }

    double f1_sum = 0.0;
    double bleu_sum = 0.0;
    double token_sum = 0.0;
    double iteration_sum = 0.0;
    std::map<int, std::vector<const ItemResult*>> by_category;
    for (const ItemResult& row : report.items) {
        f1_sum += row.f1;
        bleu_sum += row.bleu;
        token_sum += static_cast<double>(row.tokens);
        iteration_sum += static_cast<double>(row.iterations);
        by_category[row.category.value_or(0)].push_back(&row);
    }
    double n = static_cast<double>(report.items.size());
    if (n > 0) {
        report.overall_f1 = f1_sum / n;
        report.overall_bleu = bleu_sum / n;
        report.mean_tokens = token_sum / n;
        report.mean_iterations = iteration_sum / n;
    }
    for (const auto& [category, rows] : by_category) {
        CategoryStats stats;
        stats.count = rows.size();
        for (const ItemResult* row : rows) {
            stats.f1 += row->f1;
            stats.bleu += row->bleu;
        }
        stats.f1 /= static_cast<double>(rows.size());
        stats.bleu /= static_cast<double>(rows.size());
        report.per_category[category] = stats;
    }
    return report;
}

nlohmann::json eval_report_to_json(const EvalReport& report) {
    nlohmann::json items = nlohmann::json::array();
    for (const ItemResult& row : report.items) {
        nlohmann::json item = {{"item_id", row.item_id},
                               {"prediction", row.prediction},
                               {"f1", row.f1},
                               {"bleu1", row.bleu},
                               {"iterations", row.iterations},
                               {"tokens", row.tokens},
                               {"failed", row.failed}};
        if (row.category.has_value()) {
            item["category"] = *row.category;
        }
        if (!row.error.empty()) {
            item["error"] = row.error;
        }
        items.push_back(std::move(item));
    }
    nlohmann::json per_category = nlohmann::json::object();
    for (const auto& [category, stats] : report.per_category) {
        per_category[std::to_string(category)] = {
            {"count", stats.count}, {"f1", stats.f1}, {"bleu1", stats.bleu}};
    }
    return {{"overall",
             {{"count", report.items.size()},
              {"f1", report.overall_f1},
              {"bleu1", report.overall_bleu}}},
            {"per_category", per_category},
            {"mean_tokens", report.mean_tokens},
            {"mean_iterations", report.mean_iterations},
            {"items", items}};
}

namespace {

const char* category_label(int category) {
    switch (category) {
        case 1: return "multi-hop";
        case 2: return "temporal";
        case 3: return "open-domain";
        case 4: return "single-hop";
        default: return "uncategorized";
    }
}

}  // namespace

std::string eval_report_table(const EvalReport& report) {
    std::ostringstream out;
    out << std::left << std::setw(16) << "category" << std::right << std::setw(8) << "count"
        << std::setw(10) << "F1" << std::setw(10) << "BLEU-1" << "\n";
    auto line = [&out](const std::string& label, std::size_t count, double f1, double bleu) {
        out << std::left << std::setw(16) << label << std::right << std::setw(8) << count
            << std::setw(10) << std::fixed << std::setprecision(2) << f1 * 100.0 << std::setw(10)
            << bleu * 100.0 << "\n";
    };
    for (const auto& [category, stats] : report.per_category) {
        line(category_label(category), stats.count, stats.f1, stats.bleu);
    }
    line("overall", report.items.size(), report.overall_f1, report.overall_bleu);
    out << std::fixed << std::setprecision(2) << "mean tokens/question: " << report.mean_tokens
        << "\nmean iterations/question: " << std::setprecision(3) << report.mean_iterations
        << "\n";
    return out.str();
}

}  // namespace memsearch
