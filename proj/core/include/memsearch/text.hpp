#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace memsearch {

// Accounting tokenizer used for token budgets, index terms and metric
// normalization: lowercase, drop ASCII punctuation, split on whitespace.
std::vector<std::string> tokenize(std::string_view text);

std::size_t count_tokens(std::string_view text);

// tokenize() plus removal of the articles "a", "an", "the".
std::vector<std::string> normalize_answer_tokens(std::string_view text);

std::string to_lower(std::string_view text);

// FNV-1a 64-bit over the raw bytes. Stable across platforms; used by the
// hash embedder and for content fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

std::string trim(std::string_view text);

}  // namespace memsearch
