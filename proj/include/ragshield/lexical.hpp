#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ragshield/core.hpp"

namespace ragshield {

struct LexicalOptions {
    std::size_t token_min_len = 2;
    bool stop_words = true;

    static LexicalOptions from(const DefenseConfig& config) {
        return {config.token_min_len, config.stop_words};
    }
};

struct ScoredTerm {
    std::string term;
    double score = 0.0;
};

struct TermTable {
    /// Top terms, best first; ties ordered lexicographically.
    std::vector<ScoredTerm> terms;
    /// Distinct tokens of each passage, in passage order.
    std::vector<std::set<std::string>> doc_term_sets;
};

/// Lowercases ASCII letters and splits on every byte that is neither an ASCII
/// letter/digit nor part of a multi-byte UTF-8 sequence. Tokens shorter than
/// `min_len` bytes are dropped.
std::vector<std::string> tokenize(std::string_view text, std::size_t min_len = 2);

/// True for the built-in English function-word list.
bool is_stop_word(std::string_view token);

/// TF-IDF over the retrieved passages.
///
/// Each passage is a vector of raw term counts weighted by the smoothed
/// inverse document frequency ln((1 + k) / (1 + df)) + 1, then L2-normalised.
/// A term's score is its mean weight across all k passages. The top
/// min(m, |vocabulary|) terms are returned. Stop words never become
/// candidates when `options.stop_words` is set.
TermTable tfidf_top_terms(const RetrievedSet& set, std::size_t m,
                          const LexicalOptions& options = {});

/// Number of passages containing strictly more than half of the table's terms.
std::size_t count_term_voters(const TermTable& table);

}  // namespace ragshield
