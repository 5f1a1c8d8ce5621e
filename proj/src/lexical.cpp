#include "ragshield/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace ragshield {

namespace {

bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           c >= 0x80;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, std::size_t min_len) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (current.size() >= min_len && !current.empty()) tokens.push_back(current);
        current.clear();
    };
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (!is_word_byte(c)) {
            flush();
            continue;
        }
        if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
        current.push_back(static_cast<char>(c));
    }
    flush();
    return tokens;
}

TermTable tfidf_top_terms(const RetrievedSet& set, std::size_t m, const LexicalOptions& options) {
    const std::size_t k = set.size();
    TermTable table;
    table.doc_term_sets.resize(k);

    // Raw counts per passage over candidate terms.
    std::vector<std::map<std::string, double>> counts(k);
    std::unordered_map<std::string, std::size_t> df;
    for (std::size_t i = 0; i < k; ++i) {
        for (auto& tok : tokenize(set.passage(i).text, options.token_min_len)) {
            table.doc_term_sets[i].insert(tok);
            if (options.stop_words && is_stop_word(tok)) continue;
            counts[i][tok] += 1.0;
        }
        for (const auto& [term, _] : counts[i]) ++df[term];
    }

    const double n_docs = static_cast<double>(k);
    std::map<std::string, double> score;
    for (std::size_t i = 0; i < k; ++i) {
        double norm = 0.0;
        for (auto& [term, w] : counts[i]) {
            w *= std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df[term]))) + 1.0;
            norm += w * w;
        }
        if (norm <= 0.0) continue;
        norm = std::sqrt(norm);
        for (const auto& [term, w] : counts[i]) score[term] += w / norm;
    }

    std::vector<std::pair<std::string, double>> items;
    items.reserve(score.size());
    for (const auto& [term, s] : score) items.emplace_back(term, s / n_docs);
    const std::size_t top = std::min(m, items.size());
    auto best = rank_top_k<std::string>(items, top);

    table.terms.reserve(top);
    for (auto& term : best) {
        double s = score[term] / n_docs;
        table.terms.push_back({std::move(term), s});
    }
    return table;
}

std::size_t count_term_voters(const TermTable& table) {
    const std::size_t m = table.terms.size();
    std::size_t voters = 0;
    for (const auto& doc : table.doc_term_sets) {
        std::size_t hits = 0;
        for (const auto& t : table.terms) hits += doc.count(t.term);
        if (2 * hits > m) ++voters;
    }
    return voters;
}

}  // namespace ragshield
