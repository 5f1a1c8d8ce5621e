#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ragshield/core.hpp"
#include "ragshield/grouping.hpp"

namespace ragshield {

struct SimilarPair {
    std::size_t i = 0;  // i < j
    std::size_t j = 0;
    double sim = 0.0;
};

struct PairScoreBoard {
    std::size_t n_pairs = 1;
    std::vector<SimilarPair> top_pairs;
    std::vector<double> freq_scores;
};

struct Diagnostics {
    std::optional<Stage1Result> stage1;
    std::optional<PairScoreBoard> stage2;
};

/// Partition of a retrieved set. Id lists keep the input passage order.
struct FilterOutcome {
    std::size_t n_adv = 0;
    std::vector<std::size_t> adversarial;  // passage indices, ascending
    std::vector<std::size_t> safe;         // passage indices, ascending
    std::vector<std::string> adversarial_ids;
    std::vector<std::string> safe_ids;
    Diagnostics diagnostics;

    /// Fills indices and ids from a flag vector over the set.
    static FilterOutcome from_flags(const RetrievedSet& set, const std::vector<bool>& flagged);
};

/// max(1, n_adv choose 2).
std::size_t num_pairs(std::size_t n_adv);

/// The min(n_pairs, k choose 2) most similar unordered pairs, best first;
/// equal similarities keep lexicographic (i, j) order.
std::vector<SimilarPair> top_similarity_pairs(const RetrievedSet& set, std::size_t n_pairs);

/// f_i = sum over selected pairs containing i of sgn(sim) * |sim|^p.
std::vector<double> frequency_scores(const RetrievedSet& set,
                                     const std::vector<SimilarPair>& top_pairs, unsigned p);

/// Marks the n_adv passages with the largest frequency scores as adversarial.
/// n_adv == 0 returns an all-safe outcome without ranking pairs.
FilterOutcome select_adversarial(const RetrievedSet& set, std::size_t n_adv, unsigned p);

}  // namespace ragshield
