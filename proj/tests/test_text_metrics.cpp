#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "memsearch/metrics.hpp"
#include "memsearch/text.hpp"

#include "helpers.hpp"

using namespace memsearch;

TEST_CASE("accounting tokenizer lowercases, strips punctuation and splits") {
    auto tokens = tokenize("Gina opened her online clothing store on 16 March 2023.");
    std::vector<std::string> expected = {"gina", "opened", "her",   "online", "clothing",
                                         "store", "on",     "16",    "march",  "2023"};
    CHECK(tokens == expected);
    CHECK(count_tokens("Gina opened her online clothing store on 16 March 2023.") == 10);
    CHECK(tokenize("!!! ???").empty());
    CHECK(tokenize("it's-fine").size() == 1);  // punctuation dropped, not a separator
}

TEST_CASE("answer normalization drops articles") {
    auto tokens = normalize_answer_tokens("The photographer sent a letter");
    std::vector<std::string> expected = {"photographer", "sent", "letter"};
    CHECK(tokens == expected);
}

TEST_CASE("token_f1 frozen examples") {
    CHECK(token_f1("16 March 2023", "16 March 2023") == doctest::Approx(1.0));
    // P = 2/2, R = 2/3, F1 = 2 * 1 * (2/3) / (1 + 2/3)
    CHECK(token_f1("March 2023", "16 March 2023") == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(token_f1("paris", "london") == 0.0);
    CHECK(token_f1("", "") == 1.0);
    CHECK(token_f1("a the an", "the") == 1.0);  // both normalize to empty
    CHECK(token_f1("something", "") == 0.0);
}

TEST_CASE("token_f1 symmetry and bounds over random pairs") {
    std::mt19937_64 rng(20260809);
    for (int i = 0; i < 1000; ++i) {
        std::string a = test_helpers::random_sentence(rng, 0, 8);
        std::string b = test_helpers::random_sentence(rng, 0, 8);
        double ab = token_f1(a, b);
        double ba = token_f1(b, a);
        CHECK(ab == ba);
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
    }
}

TEST_CASE("bleu1 frozen examples") {
    CHECK(bleu1("16 March 2023", "16 March 2023") == doctest::Approx(1.0));
    // precision 1.0, BP = e^{1 - 3/2}
    CHECK(bleu1("March 2023", "16 March 2023") ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK(bleu1("", "16 March 2023") == 0.0);
    CHECK(bleu1("March 2023", "16 March 2023", /*brevity_penalty=*/false) ==
          doctest::Approx(1.0));
}

TEST_CASE("bleu1 bounds over random pairs") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 500; ++i) {
        std::string a = test_helpers::random_sentence(rng, 0, 8);
        std::string b = test_helpers::random_sentence(rng, 0, 8);
        double score = bleu1(a, b);
        CHECK(score >= 0.0);
        CHECK(score <= 1.0);
    }
}

TEST_CASE("fnv1a64 is the reference construction") {
    // h = offset basis, then per byte: h ^= byte; h *= prime
    auto reference = [](const std::string& s) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    };
    for (const char* s : {"gina", "store", "march", ""}) {
        CHECK(fnv1a64(s) == reference(s));
    }
}
