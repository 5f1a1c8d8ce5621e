#include "ragshield/grouping.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace ragshield {

namespace {

void require_pairable(const RetrievedSet& set, const char* op) {
    if (set.size() < 2) {
        throw Error(ErrorCode::SetTooSmall, std::string(op) + ": need at least 2 passages, got " +
                                                std::to_string(set.size()));
    }
}

}  // namespace

std::vector<std::size_t> ClusterSplit::members(int label) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) out.push_back(i);
    }
    return out;
}

double median(std::vector<double> values) {
    const std::size_t n = values.size();
    std::sort(values.begin(), values.end());
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ClusterSplit agglomerative_two_split(const RetrievedSet& set) {
    require_pairable(set, "agglomerative_two_split");
    const std::size_t k = set.size();

    // Slot c holds a live cluster while sizes[c] > 0. Passages start with
    // ids 0..k-1 and the n-th merge creates id k+n. link[a][b] is the sum of
    // member-pair similarities between slots a and b.
    std::vector<std::size_t> owner(k);
    std::iota(owner.begin(), owner.end(), 0);
    std::vector<std::size_t> ids(k);
    std::iota(ids.begin(), ids.end(), 0);
    std::vector<std::size_t> sizes(k, 1);
    std::vector<std::vector<double>> link(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) link[i][j] = set.pair_sim(i, j);
    }

    ClusterSplit split;
    std::size_t alive = k;
    while (alive > 2) {
        std::size_t best_a = k, best_b = k;
        double best = 0.0;
        auto id_pair = [&](std::size_t a, std::size_t b) {
            return std::minmax(ids[a], ids[b]);
        };
        for (std::size_t a = 0; a < k; ++a) {
            if (sizes[a] == 0) continue;
            for (std::size_t b = a + 1; b < k; ++b) {
                if (sizes[b] == 0) continue;
                double dist = 1.0 - link[a][b] / static_cast<double>(sizes[a] * sizes[b]);
                if (best_a == k || dist < best ||
                    (dist == best && id_pair(a, b) < id_pair(best_a, best_b))) {
                    best = dist;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        const auto [left, right] = id_pair(best_a, best_b);
        split.merge_trace.push_back({left, right, best});
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] == 0 || c == best_a || c == best_b) continue;
            link[best_a][c] += link[best_b][c];
            link[c][best_a] = link[best_a][c];
        }
        sizes[best_a] += sizes[best_b];
        sizes[best_b] = 0;
        ids[best_a] = k + split.merge_trace.size() - 1;
        for (auto& o : owner) {
            if (o == best_b) o = best_a;
        }
        --alive;
    }

    // The cluster holding passage 0 versus the rest.
    const std::size_t first = owner[0];
    std::size_t first_size = sizes[first];
    std::size_t other_size = k - first_size;
    const bool first_is_minority = first_size < other_size;
    split.labels.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        bool in_first = owner[i] == first;
        split.labels[i] = (in_first == first_is_minority) ? 1 : 0;
    }
    split.n_min = std::min(first_size, other_size);
    return split;
}

Stage1Result estimate_nadv_clustering(const RetrievedSet& set, const DefenseConfig& config) {
    require_pairable(set, "estimate_nadv_clustering");
    const std::size_t k = set.size();

    Stage1Result result;
    result.terms = tfidf_top_terms(set, config.m, LexicalOptions::from(config));
    result.n_tfidf = count_term_voters(*result.terms);
    result.split = agglomerative_two_split(set);

    const bool minority_is_adversarial = 2 * *result.n_tfidf <= k;
    const std::size_t n_min = result.split->n_min;
    result.n_adv = minority_is_adversarial ? n_min : k - n_min;
    result.adversarial_group = result.split->members(minority_is_adversarial ? 1 : 0);
    return result;
}

ConcentrationStats concentration_stats(const RetrievedSet& set) {
    require_pairable(set, "concentration_stats");
    const std::size_t k = set.size();
    ConcentrationStats stats;
    stats.s_mean.resize(k);
    stats.s_median.resize(k);
    std::vector<double> others;
    others.reserve(k - 1);
    for (std::size_t i = 0; i < k; ++i) {
        others.clear();
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == i) continue;
            others.push_back(set.pair_sim(i, j));
            sum += set.pair_sim(i, j);
        }
        stats.s_mean[i] = sum / static_cast<double>(k - 1);
        stats.s_median[i] = median(others);
    }
    stats.global_mean =
        std::accumulate(stats.s_mean.begin(), stats.s_mean.end(), 0.0) / static_cast<double>(k);
    stats.global_median = median(stats.s_median);
    return stats;
}

Stage1Result estimate_nadv_concentration(const RetrievedSet& set) {
    Stage1Result result;
    result.concentration = concentration_stats(set);
    const auto& c = *result.concentration;
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (c.s_mean[i] > c.global_mean && c.s_median[i] > c.global_median) {
            result.adversarial_group.push_back(i);
        }
    }
    result.n_adv = result.adversarial_group.size();
    return result;
}

}  // namespace ragshield
