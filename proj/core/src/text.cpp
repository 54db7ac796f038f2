#include "memsearch/text.hpp"

#include <cctype>

namespace memsearch {

std::string to_lower(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char raw : text) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isspace(c)) {
            if (!current.empty()) {
                tokens.push_back(current);
                current.clear();
            }
        } else if (std::ispunct(c)) {
            continue;  // punctuation is dropped, not a separator
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!current.empty()) {
        tokens.push_back(current);
    }
    return tokens;
}

std::size_t count_tokens(std::string_view text) {
    return tokenize(text).size();
}

std::vector<std::string> normalize_answer_tokens(std::string_view text) {
    std::vector<std::string> tokens = tokenize(text);
    std::vector<std::string> kept;
    kept.reserve(tokens.size());
    for (auto& token : tokens) {
        if (token == "a" || token == "an" || token == "the") {
            continue;
        }
        kept.push_back(std::move(token));
    }
    return kept;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) {
        ++begin;
    }
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) {
        --end;
    }
    return std::string(text.substr(begin, end - begin));
}

}  // namespace memsearch
