#include "ragshield/identify.hpp"

#include <algorithm>
#include <cmath>

namespace ragshield {

FilterOutcome FilterOutcome::from_flags(const RetrievedSet& set, const std::vector<bool>& flagged) {
    FilterOutcome out;
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (flagged[i]) {
            out.adversarial.push_back(i);
            out.adversarial_ids.push_back(set.passage(i).id);
        } else {
            out.safe.push_back(i);
            out.safe_ids.push_back(set.passage(i).id);
        }
    }
    out.n_adv = out.adversarial.size();
    return out;
}

std::size_t num_pairs(std::size_t n_adv) {
    return std::max<std::size_t>(1, n_adv * (n_adv > 0 ? n_adv - 1 : 0) / 2);
}

std::vector<SimilarPair> top_similarity_pairs(const RetrievedSet& set, std::size_t n_pairs) {
    const std::size_t k = set.size();
    if (k < 2) {
        throw Error(ErrorCode::SetTooSmall, "top_similarity_pairs: need at least 2 passages");
    }
    std::vector<SimilarPair> pairs;
    pairs.reserve(k * (k - 1) / 2);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) pairs.push_back({i, j, set.pair_sim(i, j)});
    }
    // Pairs are generated in lexicographic order, so a stable sort on
    // similarity alone yields the (i, j) tie-break.
    const std::size_t take = std::min(n_pairs, pairs.size());
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const SimilarPair& a, const SimilarPair& b) { return a.sim > b.sim; });
    pairs.resize(take);
    return pairs;
}

std::vector<double> frequency_scores(const RetrievedSet& set,
                                     const std::vector<SimilarPair>& top_pairs, unsigned p) {
    std::vector<double> f(set.size(), 0.0);
    for (const auto& pair : top_pairs) {
        double magnitude = std::pow(std::abs(pair.sim), static_cast<double>(p));
        double contribution = pair.sim < 0.0 ? -magnitude : (pair.sim > 0.0 ? magnitude : 0.0);
        f[pair.i] += contribution;
        f[pair.j] += contribution;
    }
    return f;
}

FilterOutcome select_adversarial(const RetrievedSet& set, std::size_t n_adv, unsigned p) {
    const std::size_t k = set.size();
    if (n_adv > 0 && n_adv >= k) {
        throw Error(ErrorCode::NadvOutOfRange, "select_adversarial: n_adv " +
                                                   std::to_string(n_adv) + " with k " +
                                                   std::to_string(k));
    }
    std::vector<bool> flagged(k, false);
    if (n_adv == 0) return FilterOutcome::from_flags(set, flagged);

    PairScoreBoard board;
    board.n_pairs = num_pairs(n_adv);
    board.top_pairs = top_similarity_pairs(set, board.n_pairs);
    board.freq_scores = frequency_scores(set, board.top_pairs, p);

    std::vector<std::pair<std::size_t, double>> items;
    items.reserve(k);
    for (std::size_t i = 0; i < k; ++i) items.emplace_back(i, board.freq_scores[i]);
    for (std::size_t i : rank_top_k<std::size_t>(items, n_adv)) flagged[i] = true;

    auto out = FilterOutcome::from_flags(set, flagged);
    out.diagnostics.stage2 = std::move(board);
    return out;
}

}  // namespace ragshield
