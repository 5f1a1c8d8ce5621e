#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ragshield/core.hpp"
#include "ragshield/lexical.hpp"

namespace ragshield {

struct MergeStep {
    std::size_t left = 0;   // smaller cluster id of the merged pair
    std::size_t right = 0;  // larger cluster id of the merged pair
    double distance = 0.0;  // average-linkage distance at which they merged
};

/// Two-way partition from agglomerative clustering.
///
/// `labels[i]` is 1 for the minority cluster and 0 otherwise. When both
/// clusters have the same size, the cluster that does not contain passage 0
/// is the minority one.
struct ClusterSplit {
    std::vector<int> labels;
    std::size_t n_min = 0;
    std::vector<MergeStep> merge_trace;

    std::vector<std::size_t> members(int label) const;
};

struct ConcentrationStats {
    std::vector<double> s_mean;
    std::vector<double> s_median;
    double global_mean = 0.0;
    double global_median = 0.0;
};

/// What Stage 1 concluded: the estimate plus the group it considers
/// adversarial, and every intermediate needed to explain it.
struct Stage1Result {
    std::size_t n_adv = 0;
    std::vector<std::size_t> adversarial_group;
    std::optional<std::size_t> n_tfidf;
    std::optional<TermTable> terms;
    std::optional<ClusterSplit> split;
    std::optional<ConcentrationStats> concentration;
};

/// Average-linkage clustering on 1 - cosine, stopped at two clusters.
/// Passages are clusters 0..k-1 and the n-th merge creates cluster k+n, as in
/// a conventional linkage matrix. Equal linkage distances merge the
/// lexicographically smallest id pair.
ClusterSplit agglomerative_two_split(const RetrievedSet& set);

/// Cluster-size estimate gated by the TF-IDF term vote: the minority size when
/// at most half the passages vote, the majority size otherwise.
Stage1Result estimate_nadv_clustering(const RetrievedSet& set, const DefenseConfig& config);

ConcentrationStats concentration_stats(const RetrievedSet& set);

/// Passages whose mean and median similarity to the others both strictly
/// exceed the set-wide mean of means and median of medians.
Stage1Result estimate_nadv_concentration(const RetrievedSet& set);

/// Median of a non-empty sample; even counts average the two middle values.
double median(std::vector<double> values);

}  // namespace ragshield
