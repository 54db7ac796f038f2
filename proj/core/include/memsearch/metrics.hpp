#pragma once

#include <string>

namespace memsearch {

// Token-level F1 with SQuAD-style normalization (lowercase, punctuation and
// article removal, whitespace split). Multiset overlap precision/recall;
// 0 when the overlap is empty, 1 when both sides normalize to empty.
double token_f1(const std::string& prediction, const std::string& reference);

// Clipped unigram precision over the same normalized tokens, times the
// brevity penalty min(1, e^{1 - r/c}). Empty predictions score 0.
double bleu1(const std::string& prediction, const std::string& reference,
             bool brevity_penalty = true);

}  // namespace memsearch
