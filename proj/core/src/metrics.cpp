#include "memsearch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "memsearch/text.hpp"

namespace memsearch {

namespace {

std::map<std::string, std::size_t> token_counts(const std::vector<std::string>& tokens) {
    std::map<std::string, std::size_t> counts;
    for (const std::string& token : tokens) {
        ++counts[token];
    }
    return counts;
}

std::size_t overlap_size(const std::map<std::string, std::size_t>& a,
                         const std::map<std::string, std::size_t>& b) {
    std::size_t overlap = 0;
    for (const auto& [token, count] : a) {
        auto it = b.find(token);
        if (it != b.end()) {
            overlap += std::min(count, it->second);
        }
    }
    return overlap;
}

}  // namespace

double token_f1(const std::string& prediction, const std::string& reference) {
    auto pred = normalize_answer_tokens(prediction);
    auto ref = normalize_answer_tokens(reference);
    if (pred.empty() && ref.empty()) {
        return 1.0;
    }
    if (pred.empty() || ref.empty()) {
        return 0.0;
    }
    std::size_t overlap = overlap_size(token_counts(pred), token_counts(ref));
    if (overlap == 0) {
        return 0.0;
    }
    double precision = static_cast<double>(overlap) / static_cast<double>(pred.size());
    double recall = static_cast<double>(overlap) / static_cast<double>(ref.size());
    return 2.0 * precision * recall / (precision + recall);
}

double bleu1(const std::string& prediction, const std::string& reference, bool brevity_penalty) {
    auto pred = normalize_answer_tokens(prediction);
    auto ref = normalize_answer_tokens(reference);
    if (pred.empty()) {
        return 0.0;
    }
    std::size_t clipped = overlap_size(token_counts(pred), token_counts(ref));
    if (clipped == 0) {
        return 0.0;
    }
    double precision = static_cast<double>(clipped) / static_cast<double>(pred.size());
    double bp = 1.0;
    if (brevity_penalty && pred.size() < ref.size()) {
        bp = std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(pred.size()));
    }
    return precision * bp;
}

}  // namespace memsearch
