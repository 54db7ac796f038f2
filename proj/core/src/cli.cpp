#include "memsearch/cli.hpp"

#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "memsearch/errors.hpp"
#include "memsearch/text.hpp"

namespace memsearch::cli {

namespace {

int map_error(const Error& e, std::ostream& err) {
    err << "error (" << error_code_name(e.code()) << "): " << e.what() << "\n";
    return e.code() == ErrorCode::invalid_config || e.code() == ErrorCode::invalid_argument
               ? kExitUsage
               : kExitRuntime;
}

template <typename F>
int guard(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        return map_error(e, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y%m%d-%H%M%S");
    return out.str();
}

std::string hex64(std::uint64_t value) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << value;
    return out.str();
}

struct LoadedRun {
    MemoryStore store;
    std::unique_ptr<Embedder> embedder;
    std::unique_ptr<ChatProvider> provider;
    std::optional<Banks> banks;
};

LoadedRun load_run(const RunConfig& config, bool no_experience) {
    config.validate();
    LoadedRun run{MemoryStore::load(config.paths.store), make_embedder(config.embedder),
                  make_provider(config.provider), std::nullopt};
    if (run.store.embedder_id() != run.embedder->id()) {
        throw Error(ErrorCode::invalid_config,
                    "store was built with embedder " + run.store.embedder_id() +
                        " but the config selects " + run.embedder->id());
    }
    if (!no_experience && !config.paths.banks_dir.empty()) {
        run.banks = Banks{ExperienceBank::load(config.paths.banks_dir / "planning_bank.jsonl"),
                          ExperienceBank::load(config.paths.banks_dir / "reflection_bank.jsonl")};
    }
    return run;
}

std::vector<QAItem> accumulation_items(const RunConfig& config, bool no_split) {
    std::vector<QAItem> items = load_qa_items(config.paths.qa);
    if (no_split) {
        return items;
    }
    if (!config.split.conversation.empty()) {
        return split_by_conversation(std::move(items), config.split.conversation).accumulation;
    }
    return split_accumulation(std::move(items), config.split.fraction, config.seed).accumulation;
}

std::vector<QAItem> evaluation_items(const RunConfig& config, bool no_split) {
    std::vector<QAItem> items = load_qa_items(config.paths.qa);
    if (no_split) {
        return items;
    }
    if (!config.split.conversation.empty()) {
        return split_by_conversation(std::move(items), config.split.conversation).evaluation;
    }
    return split_accumulation(std::move(items), config.split.fraction, config.seed).evaluation;
}

}  // namespace

std::filesystem::path run_directory(const RunConfig& config, const std::string& run_name) {
    std::string name = run_name.empty() ? config.run_name : run_name;
    if (name.empty()) {
        name = utc_timestamp();
    }
    return config.paths.output_dir / ("run-" + name);
}

std::string question_slug(const std::string& question) {
    std::string slug;
    bool pending_dash = false;
    for (char c : question) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            if (pending_dash && !slug.empty()) {
                slug += '-';
            }
            pending_dash = false;
            slug += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (slug.size() >= 40) {
                break;
            }
        } else {
            pending_dash = true;
        }
    }
    if (slug.empty()) {
        slug = "question";
    }
    return slug + "-" + hex64(fnv1a64(question)).substr(0, 8);
}

int cmd_ingest(const IngestOptions& options, std::ostream& out, std::ostream& err) {
    return guard(err, [&]() {
        std::ifstream in(options.corpus);
        if (!in) {
            throw Error(ErrorCode::load_error, "cannot open corpus file " + options.corpus.string());
        }
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::load_error,
                        "corpus file " + options.corpus.string() + ": " + e.what());
        }

        std::vector<RawPage> pages;
        if (options.format == "records") {
            pages = parse_corpus_records(doc);
        } else if (options.format == "conversations") {
            pages = pages_from_conversations(doc);
        } else if (options.format == "docqa") {
            DocQaDataset dataset = parse_docqa(doc);
            pages = std::move(dataset.pages);
            if (!options.qa_out.empty()) {
                nlohmann::json qa = nlohmann::json::array();
                for (const QAItem& item : dataset.items) {
                    nlohmann::json record = {{"item_id", item.item_id},
                                             {"question", item.question},
                                             {"answer", item.reference_answer}};
                    if (item.category.has_value()) {
                        record["category"] = *item.category;
                    }
                    qa.push_back(std::move(record));
                }
                std::ofstream qa_out(options.qa_out);
                if (!qa_out) {
                    throw Error(ErrorCode::load_error,
                                "cannot open " + options.qa_out.string() + " for writing");
                }
                qa_out << qa.dump(2) << "\n";
            }
        } else {
            throw Error(ErrorCode::invalid_config, "unknown ingest format: " + options.format);
        }

        auto embedder = make_embedder(options.embedder);
        MemoryStore store = MemoryStore::build(pages, *embedder);
        store.save(options.out);
        out << "pages=" << store.size() << " hash=" << hex64(fnv1a64(store.to_json().dump()))
            << " -> " << options.out.string() << "\n";
        return kExitOk;
    });
}

int cmd_accumulate(const RunOptions& options, std::ostream& out, std::ostream& err) {
    return guard(err, [&]() {
        const RunConfig& config = options.config;
        config.validate();
        std::vector<QAItem> items = accumulation_items(config, options.no_split);

        if (options.dry_run) {
            out << "accumulation plan (" << items.size() << " items):\n";
            for (const QAItem& item : items) {
                out << "  " << item.item_id << ": " << item.question << "\n";
            }
            return kExitOk;
        }

        MemoryStore store = MemoryStore::load(config.paths.store);
        auto embedder = make_embedder(config.embedder);
        auto provider = make_provider(config.provider);
        CallLog log;
        Gateway gateway(*provider, options.log_calls ? &log : nullptr,
                        config.provider.strict_json, config.provider.temperature);

        OfflineStageResult result =
            run_offline_stage(items, store, *embedder, gateway, config.stage_config());

        std::filesystem::path rundir = run_directory(config, options.run_name);
        std::filesystem::create_directories(rundir);
        result.banks.planning.save(rundir / "planning_bank.jsonl");
        result.banks.reflection.save(rundir / "reflection_bank.jsonl");
        std::ofstream report(rundir / "stage_report.json");
        report << offline_report_to_json(result).dump(2) << "\n";
        if (options.log_calls) {
            log.write_jsonl(rundir / "calls.jsonl");
        }

        out << "trajectories=" << result.trajectories << " reports=" << result.reports
            << " planning=" << result.banks.planning.size()
            << " reflection=" << result.banks.reflection.size() << " -> " << rundir.string()
            << "\n";
        return kExitOk;
    });
}

int cmd_search(const std::string& question, const RunOptions& options, std::ostream& out,
               std::ostream& err, const std::string& question_id) {
    return guard(err, [&]() {
        if (question.empty()) {
            throw Error(ErrorCode::invalid_argument, "question must be non-empty");
        }
        LoadedRun run = load_run(options.config, options.no_experience);
        CallLog log;
        Gateway gateway(*run.provider, options.log_calls ? &log : nullptr,
                        options.config.provider.strict_json, options.config.provider.temperature);
        DeepSearchEngine engine(gateway, run.store, *run.embedder);

        std::string qid = question_id.empty() ? question_slug(question) : question_id;
        SearchConfig search = options.config.stage_config().search;
        Trajectory trajectory =
            engine.run(question, run.banks ? &*run.banks : nullptr, search, qid);

        std::filesystem::path rundir = run_directory(options.config, options.run_name);
        std::filesystem::create_directories(rundir / "trajectories");
        save_trajectory(trajectory, rundir / "trajectories" / (qid + ".json"));
        if (options.log_calls) {
            std::filesystem::create_directories(rundir / "calls");
            log.write_jsonl(rundir / "calls" / (qid + ".jsonl"));
        }

        out << "answer: " << trajectory.answer << "\n";
        out << "iterations: " << trajectory.steps.size()
            << " terminated_by: " << termination_name(trajectory.terminated_by) << "\n";
        out << "tokens: " << trajectory.usage.total() << " (prompt "
            << trajectory.usage.prompt_tokens << ", completion "
            << trajectory.usage.completion_tokens << ")\n";
        return kExitOk;
    });
}

int cmd_eval(const RunOptions& options, std::ostream& out, std::ostream& err) {
    return guard(err, [&]() {
        const RunConfig& config = options.config;
        LoadedRun run = load_run(config, options.no_experience);
        std::vector<QAItem> items = evaluation_items(config, options.no_split);

        CallLog log;
        Gateway gateway(*run.provider, options.log_calls ? &log : nullptr,
                        config.provider.strict_json, config.provider.temperature);

        std::filesystem::path rundir = run_directory(config, options.run_name);
        std::filesystem::create_directories(rundir / "trajectories");

        EvalReport report = run_online_stage(
            items, run.store, *run.embedder, gateway, run.banks ? &*run.banks : nullptr,
            config.stage_config(), [&rundir](const QAItem& item, const Trajectory& trajectory) {
                save_trajectory(trajectory, rundir / "trajectories" / (item.item_id + ".json"));
            });

        std::ofstream report_file(rundir / "report.json");
        report_file << eval_report_to_json(report).dump(2) << "\n";
        if (options.log_calls) {
            log.write_jsonl(rundir / "calls.jsonl");
        }

        out << eval_report_table(report);
        out << "report -> " << (rundir / "report.json").string() << "\n";
        return kExitOk;
    });
}

int cmd_bank_ls(const BankOptions& options, std::ostream& out, std::ostream& err) {
    return guard(err, [&]() {
        ExperienceBank bank = ExperienceBank::load(options.bank);
        out << "kind=" << module_kind_tag(bank.kind()) << " embedder=" << bank.embedder_id()
            << " entries=" << bank.size() << "\n";
        for (const BankEntry& entry : bank.entries()) {
            std::string text = entry.experience_text;
            if (text.size() > 72) {
                text = text.substr(0, 69) + "...";
            }
            out << entry.entry_id << "  [" << quality_name(entry.quality) << "]  " << text << "\n";
        }
        return kExitOk;
    });
}

int cmd_bank_show(const BankOptions& options, std::ostream& out, std::ostream& err) {
    return guard(err, [&]() {
        ExperienceBank bank = ExperienceBank::load(options.bank);
        const BankEntry* entry = bank.find(options.entry_id);
        if (entry == nullptr) {
            throw Error(ErrorCode::invalid_argument,
                        "no entry " + options.entry_id + " in " + options.bank.string());
        }
        nlohmann::json doc = bank_entry_to_json(*entry);
        doc.erase("key_embedding");  // not human-readable; bank ls | show are for inspection
        out << doc.dump(2) << "\n";
        return kExitOk;
    });
}

}  // namespace memsearch::cli
