#include <random>

#include "capital_france.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "ragshield/lexical.hpp"

using namespace ragshield;

namespace {

std::vector<std::string> term_names(const TermTable& t) {
    std::vector<std::string> out;
    for (const auto& s : t.terms) out.push_back(s.term);
    return out;
}

RetrievedSet set_of_texts(const std::vector<std::string>& texts) {
    oracle::Matrix m(texts.size(), std::vector<double>(texts.size(), 0.0));
    for (std::size_t i = 0; i < texts.size(); ++i) m[i][i] = 1.0;
    return oracle::set_from_matrix(m, texts);
}

std::string random_text(std::mt19937_64& rng) {
    static const std::vector<std::string> vocab = {"alpha", "beta", "gamma", "delta", "eps",
                                                   "zeta",  "eta",  "theta", "the",   "of"};
    std::string out;
    std::size_t n = 1 + rng() % 8;
    for (std::size_t i = 0; i < n; ++i) out += vocab[rng() % vocab.size()] + (rng() % 3 ? " " : ", ");
    return out;
}

}  // namespace

TEST_CASE("tokenize examples") {
    CHECK(tokenize("Paris, the capital of France!") ==
          std::vector<std::string>{"paris", "the", "capital", "of", "france"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("La Ville Rose") == std::vector<std::string>{"la", "ville", "rose"});
    CHECK(tokenize("a I x") .empty());
    CHECK(tokenize("a I x", 1) == std::vector<std::string>{"a", "i", "x"});
    CHECK(tokenize("caf\xc3\xa9 ol\xc3\xa9") == std::vector<std::string>{"caf\xc3\xa9", "ol\xc3\xa9"});
    CHECK(tokenize("route-66") == std::vector<std::string>{"route", "66"});
}

TEST_CASE("stop word list") {
    CHECK(is_stop_word("the"));
    CHECK(is_stop_word("of"));
    CHECK_FALSE(is_stop_word("france"));
    CHECK_FALSE(is_stop_word("capital"));
}

TEST_CASE("top terms on the worked example") {
    auto set = capital_france::make_set();
    auto table = tfidf_top_terms(set, 3);
    auto names = term_names(table);
    std::sort(names.begin(), names.end());
    CHECK(names == std::vector<std::string>{"capital", "city", "france"});
    CHECK(count_term_voters(table) == 4);
}

TEST_CASE("top terms match the brute-force TF-IDF oracle") {
    std::set<std::string> stops;
    std::mt19937_64 rng(21);
    for (int t = 0; t < 300; ++t) {
        std::size_t k = 2 + rng() % 5;
        std::vector<std::string> texts;
        for (std::size_t i = 0; i < k; ++i) texts.push_back(random_text(rng));
        auto set = set_of_texts(texts);
        std::size_t m = 1 + rng() % 6;

        LexicalOptions keep_all{2, false};
        auto table = tfidf_top_terms(set, m, keep_all);
        auto expected = oracle::tfidf_scores(texts);
        REQUIRE(table.terms.size() == std::min(m, expected.size()));
        for (std::size_t i = 0; i < table.terms.size(); ++i) {
            CHECK(std::abs(table.terms[i].score - expected[i].score) < 1e-12);
            // Near-equal scores may legitimately order differently in the last bit.
            if (i + 1 < expected.size() && std::abs(expected[i].score - expected[i + 1].score) > 1e-12 &&
                (i == 0 || std::abs(expected[i].score - expected[i - 1].score) > 1e-12)) {
                CHECK(table.terms[i].term == expected[i].term);
            }
        }

        auto filtered = tfidf_top_terms(set, m);
        auto expected_f = oracle::tfidf_scores(texts, {"the", "of"});
        REQUIRE(filtered.terms.size() == std::min(m, expected_f.size()));
        for (const auto& term : filtered.terms) CHECK_FALSE(is_stop_word(term.term));

        std::vector<std::string> top;
        for (const auto& s : table.terms) top.push_back(s.term);
        CHECK(count_term_voters(table) == oracle::voters(texts, top));
    }
}

TEST_CASE("shared rare term wins") {
    auto set = set_of_texts({"zebra apple", "zebra banana", "zebra cherry", "zebra damson", "elder"});
    auto table = tfidf_top_terms(set, 1);
    REQUIRE(table.terms.size() == 1);
    CHECK(table.terms[0].term == "zebra");
    auto expected = oracle::tfidf_scores({"zebra apple", "zebra banana", "zebra cherry", "zebra damson", "elder"});
    CHECK(expected[0].term == "zebra");
    CHECK(std::abs(table.terms[0].score - expected[0].score) < 1e-12);
}

TEST_CASE("identical passages fall back to frequency then lexical order") {
    auto set = set_of_texts({"kiwi kiwi fig pear", "kiwi kiwi fig pear", "kiwi kiwi fig pear"});
    CHECK(term_names(tfidf_top_terms(set, 2)) == std::vector<std::string>{"kiwi", "fig"});
    CHECK(term_names(tfidf_top_terms(set, 10)) == std::vector<std::string>{"kiwi", "fig", "pear"});
}

TEST_CASE("voter count properties") {
    auto set = capital_france::make_set();
    auto table = tfidf_top_terms(set, 3);

    SUBCASE("bounded by k and invariant under reordering") {
        auto rev = table;
        std::reverse(rev.doc_term_sets.begin(), rev.doc_term_sets.end());
        CHECK(count_term_voters(rev) == count_term_voters(table));
        CHECK(count_term_voters(table) <= set.size());
    }
    SUBCASE("a passage holding every top term adds exactly one voter") {
        auto more = table;
        std::set<std::string> all;
        for (const auto& t : table.terms) all.insert(t.term);
        more.doc_term_sets.push_back(all);
        CHECK(count_term_voters(more) == count_term_voters(table) + 1);
    }
    SUBCASE("no passage above half") {
        TermTable t;
        t.terms = {{"a", 1}, {"b", 1}, {"c", 1}, {"d", 1}};
        t.doc_term_sets = {{"a", "b"}, {"c"}, {"x"}};
        CHECK(count_term_voters(t) == 0);
        t.doc_term_sets.push_back({"a", "b", "c"});
        CHECK(count_term_voters(t) == 1);
    }
}
