#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "memsearch/embedding.hpp"
#include "memsearch/llm_gateway.hpp"
#include "memsearch/memstore.hpp"

namespace test_helpers {

inline std::filesystem::path fixture_path(const std::string& name) {
    return std::filesystem::path(MEMSEARCH_FIXTURE_DIR) / name;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline std::filesystem::path temp_dir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    auto dir = std::filesystem::temp_directory_path() /
               ("memsearch_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(dir);
    return dir;
}

inline memsearch::MemoryStore gina_store(const memsearch::Embedder& embedder) {
    auto pages = memsearch::load_corpus_records(fixture_path("gina_corpus.json"));
    return memsearch::MemoryStore::build(pages, embedder);
}

inline memsearch::ScriptedProvider fixture_provider(const std::string& name) {
    return memsearch::ScriptedProvider::from_file(fixture_path(name));
}

// Random lowercase word, 3-8 letters.
inline std::string random_word(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> len(3, 8);
    std::uniform_int_distribution<int> letter('a', 'z');
    std::string word;
    int n = len(rng);
    for (int i = 0; i < n; ++i) {
        word.push_back(static_cast<char>(letter(rng)));
    }
    return word;
}

inline std::string random_sentence(std::mt19937_64& rng, std::size_t min_words,
                                   std::size_t max_words) {
    std::uniform_int_distribution<std::size_t> count(min_words, max_words);
    std::size_t n = count(rng);
    std::string sentence;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) sentence += " ";
        sentence += random_word(rng);
    }
    return sentence;
}

}  // namespace test_helpers
