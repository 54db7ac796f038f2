#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "memsearch/config.hpp"

namespace memsearch::cli {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // usage / config errors
inline constexpr int kExitRuntime = 2;  // runtime failures

struct IngestOptions {
    std::filesystem::path corpus;
    std::filesystem::path out;
    std::string format = "records";  // records | conversations | docqa
    std::filesystem::path qa_out;    // docqa only
    EmbedderConfig embedder;
};

struct RunOptions {
    RunConfig config;
    std::string run_name;       // run directory is <output_dir>/run-<name>
    bool dry_run = false;       // accumulate: list items, write nothing
    bool no_experience = false; // search/eval: force empty banks
    bool no_split = false;      // accumulate/eval: use every QA item as-is
    bool log_calls = false;     // write calls.jsonl next to trajectories
};

struct BankOptions {
    std::filesystem::path bank;
    std::string entry_id;  // show only
};

int cmd_ingest(const IngestOptions& options, std::ostream& out, std::ostream& err);
int cmd_accumulate(const RunOptions& options, std::ostream& out, std::ostream& err);
int cmd_search(const std::string& question, const RunOptions& options, std::ostream& out,
               std::ostream& err, const std::string& question_id = "");
int cmd_eval(const RunOptions& options, std::ostream& out, std::ostream& err);
int cmd_bank_ls(const BankOptions& options, std::ostream& out, std::ostream& err);
int cmd_bank_show(const BankOptions& options, std::ostream& out, std::ostream& err);

// <output_dir>/run-<name>; name falls back to a UTC timestamp.
std::filesystem::path run_directory(const RunConfig& config, const std::string& run_name);

// Filesystem-safe id for ad-hoc questions: lowercased alnum runs joined by
// dashes, capped, plus a content fingerprint.
std::string question_slug(const std::string& question);

}  // namespace memsearch::cli
