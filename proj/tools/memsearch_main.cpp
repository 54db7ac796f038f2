// memsearch CLI: ingest a corpus, accumulate experience banks from judged
// trajectories, run single searches, and evaluate QA performance.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "memsearch/cli.hpp"
#include "memsearch/errors.hpp"

namespace {

using memsearch::RunConfig;

struct ConfigFlags {
    std::string config_file;
    std::optional<std::string> store;
    std::optional<std::string> qa;
    std::optional<std::string> banks;
    std::optional<std::string> output_dir;
    std::optional<std::string> fixtures;
    std::optional<int> k_low;
    std::optional<int> k_high;
    std::optional<std::size_t> topk;
    std::optional<double> exp_weight;
    std::optional<std::size_t> max_iterations;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
    cmd->add_option("--config", flags.config_file, "run config JSON file");
    cmd->add_option("--store", flags.store, "memory store snapshot (overrides config)");
    cmd->add_option("--qa", flags.qa, "QA items file (overrides config)");
    cmd->add_option("--banks", flags.banks, "experience bank directory (overrides config)");
    cmd->add_option("--output-dir", flags.output_dir, "run output directory (overrides config)");
    cmd->add_option("--fixtures", flags.fixtures, "scripted provider fixture file (overrides config)");
    cmd->add_option("--k-low", flags.k_low, "bad-quality threshold (overrides config)");
    cmd->add_option("--k-high", flags.k_high, "good-quality threshold (overrides config)");
    cmd->add_option("--topk", flags.topk, "experiences retrieved per step (overrides config)");
    cmd->add_option("--exp-weight", flags.exp_weight, "similarity exponent (overrides config)");
    cmd->add_option("--max-iterations", flags.max_iterations, "search iteration cap (overrides config)");
    cmd->add_option("--seed", flags.seed, "random seed (overrides config)");
    cmd->add_option("--jobs", flags.jobs, "parallel eval workers (overrides config)");
}

// config file first, then flags win
RunConfig resolve_config(const ConfigFlags& flags) {
    RunConfig config;
    if (!flags.config_file.empty()) {
        config = RunConfig::from_file(flags.config_file);
    }
    if (flags.store) config.paths.store = *flags.store;
    if (flags.qa) config.paths.qa = *flags.qa;
    if (flags.banks) config.paths.banks_dir = *flags.banks;
    if (flags.output_dir) config.paths.output_dir = *flags.output_dir;
    if (flags.fixtures) {
        config.provider.type = "scripted";
        config.provider.fixture_file = *flags.fixtures;
    }
    if (flags.k_low) config.k_low = *flags.k_low;
    if (flags.k_high) config.k_high = *flags.k_high;
    if (flags.topk) config.retrieval.k = *flags.topk;
    if (flags.exp_weight) config.retrieval.exp_weight = *flags.exp_weight;
    if (flags.max_iterations) config.loop.max_iterations = *flags.max_iterations;
    if (flags.seed) config.seed = *flags.seed;
    if (flags.jobs) config.jobs = *flags.jobs;
    config.loop.retrieval = config.retrieval;
    config.loop.seed = config.seed;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deep memory search with reusable planning/reflection experience"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "build a memory store snapshot from a corpus");
    memsearch::cli::IngestOptions ingest_options;
    std::string ingest_corpus;
    std::string ingest_out;
    std::string ingest_qa_out;
    ingest->add_option("--corpus", ingest_corpus, "corpus JSON file")->required();
    ingest->add_option("--out", ingest_out, "store snapshot output path")->required();
    ingest->add_option("--format", ingest_options.format,
                       "records | conversations | docqa (default records)");
    ingest->add_option("--qa-out", ingest_qa_out, "extract QA items here (docqa only)");
    ingest->add_option("--dimension", ingest_options.embedder.dimension,
                       "hash embedder dimension (default 256)");

    // accumulate
    auto* accumulate = app.add_subcommand("accumulate", "build experience banks offline");
    ConfigFlags accumulate_flags;
    memsearch::cli::RunOptions accumulate_options;
    add_config_flags(accumulate, accumulate_flags);
    accumulate->add_option("--name", accumulate_options.run_name, "run directory name");
    accumulate->add_flag("--dry-run", accumulate_options.dry_run, "list planned items, write nothing");
    accumulate->add_flag("--no-split", accumulate_options.no_split, "accumulate over every QA item");
    accumulate->add_flag("--log-calls", accumulate_options.log_calls, "write calls.jsonl");

    // search
    auto* search = app.add_subcommand("search", "answer one question end to end");
    ConfigFlags search_flags;
    memsearch::cli::RunOptions search_options;
    std::string search_question;
    std::string search_question_id;
    search->add_option("question", search_question, "the question to answer")->required();
    add_config_flags(search, search_flags);
    search->add_option("--name", search_options.run_name, "run directory name");
    search->add_option("--question-id", search_question_id, "id for the trajectory file");
    search->add_flag("--no-experience", search_options.no_experience, "force empty banks");
    search->add_flag("--log-calls", search_options.log_calls, "write per-question call logs");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate QA performance over a dataset");
    ConfigFlags eval_flags;
    memsearch::cli::RunOptions eval_options;
    add_config_flags(eval, eval_flags);
    eval->add_option("--name", eval_options.run_name, "run directory name");
    eval->add_flag("--baseline,--no-experience", eval_options.no_experience,
                   "run with empty banks");
    eval->add_flag("--no-split", eval_options.no_split, "evaluate over every QA item");
    eval->add_flag("--log-calls", eval_options.log_calls, "write calls.jsonl");

    // bank
    auto* bank = app.add_subcommand("bank", "inspect experience banks");
    bank->require_subcommand(1);
    auto* bank_ls = bank->add_subcommand("ls", "list bank entries");
    memsearch::cli::BankOptions bank_ls_options;
    std::string bank_ls_path;
    bank_ls->add_option("--bank", bank_ls_path, "bank JSONL file")->required();
    auto* bank_show = bank->add_subcommand("show", "print one bank entry");
    memsearch::cli::BankOptions bank_show_options;
    std::string bank_show_path;
    bank_show->add_option("entry_id", bank_show_options.entry_id, "entry id")->required();
    bank_show->add_option("--bank", bank_show_path, "bank JSONL file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : memsearch::cli::kExitUsage;
    }

    try {
        if (ingest->parsed()) {
            ingest_options.corpus = ingest_corpus;
            ingest_options.out = ingest_out;
            ingest_options.qa_out = ingest_qa_out;
            return memsearch::cli::cmd_ingest(ingest_options, std::cout, std::cerr);
        }
        if (accumulate->parsed()) {
            accumulate_options.config = resolve_config(accumulate_flags);
            return memsearch::cli::cmd_accumulate(accumulate_options, std::cout, std::cerr);
        }
        if (search->parsed()) {
            search_options.config = resolve_config(search_flags);
            return memsearch::cli::cmd_search(search_question, search_options, std::cout,
                                              std::cerr, search_question_id);
        }
        if (eval->parsed()) {
            eval_options.config = resolve_config(eval_flags);
            return memsearch::cli::cmd_eval(eval_options, std::cout, std::cerr);
        }
        if (bank_ls->parsed()) {
            bank_ls_options.bank = bank_ls_path;
            return memsearch::cli::cmd_bank_ls(bank_ls_options, std::cout, std::cerr);
        }
        if (bank_show->parsed()) {
            bank_show_options.bank = bank_show_path;
            return memsearch::cli::cmd_bank_show(bank_show_options, std::cout, std::cerr);
        }
    } catch (const memsearch::Error& e) {
        std::cerr << "error (" << memsearch::error_code_name(e.code()) << "): " << e.what()
                  << "\n";
        return e.code() == memsearch::ErrorCode::invalid_config ? memsearch::cli::kExitUsage
                                                                : memsearch::cli::kExitRuntime;
    }
    return memsearch::cli::kExitUsage;
}
