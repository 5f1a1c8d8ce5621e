#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ragshield/error.hpp"

namespace ragshield {

using Vector = std::vector<double>;

/// Evaluation-only provenance of a passage. Production inputs leave it unset.
enum class Origin { corpus, injected, golden };

std::string_view to_string(Origin origin);
std::optional<Origin> parse_origin(std::string_view text);

struct Passage {
    std::string id;
    std::string text;
    Vector embedding;
    std::optional<Origin> origin;
};

struct Query {
    std::string id;
    std::string text;
    Vector embedding;
};

/// Dense symmetric k x k matrix stored row-major.
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    explicit SimilarityMatrix(std::size_t k) : k_(k), values_(k * k, 0.0) {}

    std::size_t size() const noexcept { return k_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * k_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return values_[i * k_ + j]; }
    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * k_, k_};
    }

private:
    std::size_t k_ = 0;
    std::vector<double> values_;
};

/// The k passages retrieved for one query, with cached cosine similarities.
/// Immutable once built.
class RetrievedSet {
public:
    RetrievedSet() = default;

    const Query& query() const noexcept { return query_; }
    const std::vector<Passage>& passages() const noexcept { return passages_; }
    const Passage& passage(std::size_t i) const { return passages_.at(i); }
    std::size_t size() const noexcept { return passages_.size(); }

    double query_sim(std::size_t i) const { return query_sims_.at(i); }
    const std::vector<double>& query_sims() const noexcept { return query_sims_; }
    double pair_sim(std::size_t i, std::size_t j) const { return pair_sims_(i, j); }
    const SimilarityMatrix& pair_sims() const noexcept { return pair_sims_; }

    /// Index of the passage with the given id, if present.
    std::optional<std::size_t> index_of(std::string_view id) const;

    /// Builds a set whose similarities are supplied directly instead of being
    /// derived from embeddings. Used for fixtures and similarity-only inputs;
    /// passage embeddings may then be empty.
    static RetrievedSet from_similarities(Query query, std::vector<Passage> passages,
                                          std::vector<double> query_sims,
                                          SimilarityMatrix pair_sims);

private:
    friend RetrievedSet build_retrieved_set(Query query, std::vector<Passage> passages);

    Query query_;
    std::vector<Passage> passages_;
    std::vector<double> query_sims_;
    SimilarityMatrix pair_sims_;
};

/// Cosine of the angle between two vectors, clamped to [-1, 1].
/// Throws DimensionMismatch or ZeroNormVector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Validates ids and dimensions, then fills both similarity caches.
RetrievedSet build_retrieved_set(Query query, std::vector<Passage> passages);

enum class Strategy { clustering, concentration };
enum class StageMode { both, stage1_only, stage2_only };

std::string_view to_string(Strategy s);
std::string_view to_string(StageMode m);
std::optional<Strategy> parse_strategy(std::string_view text);
std::optional<StageMode> parse_stage_mode(std::string_view text);

struct Fraction {
    std::uint32_t numerator = 1;
    std::uint32_t denominator = 2;
};

struct DefenseConfig {
    Strategy strategy = Strategy::clustering;
    StageMode stage_mode = StageMode::both;
    std::size_t m = 5;
    unsigned p = 2;
    Fraction stage2_only_fraction{1, 2};
    std::size_t token_min_len = 2;
    /// Exclude common English function words from top-term candidacy.
    bool stop_words = true;

    /// Throws InvalidConfig when an invariant does not hold.
    void validate() const;
};

/// Keys of the K highest-scoring items, best first. Equal scores fall back to
/// ascending key order, so the result is a prefix of one fixed total order.
template <typename Key>
std::vector<Key> rank_top_k(std::span<const std::pair<Key, double>> items, std::size_t top) {
    if (top > items.size()) {
        throw Error(ErrorCode::KTooLarge, "rank_top_k: requested " + std::to_string(top) +
                                              " of " + std::to_string(items.size()) + " items");
    }
    std::vector<std::pair<Key, double>> sorted(items.begin(), items.end());
    auto better = [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    };
    std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(top),
                      sorted.end(), better);
    std::vector<Key> keys;
    keys.reserve(top);
    for (std::size_t i = 0; i < top; ++i) keys.push_back(sorted[i].first);
    return keys;
}

template <typename Key>
std::vector<Key> rank_top_k(const std::vector<std::pair<Key, double>>& items, std::size_t top) {
    return rank_top_k<Key>(std::span<const std::pair<Key, double>>(items), top);
}

}  // namespace ragshield
