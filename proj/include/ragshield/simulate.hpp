#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ragshield/core.hpp"
#include "ragshield/pipeline.hpp"

namespace ragshield {

enum class AttackKind { clustered, adaptive_dispersed, multi_cluster, phantom };

std::string_view to_string(AttackKind kind);
std::optional<AttackKind> parse_attack_kind(std::string_view text);

/// Recipe for a synthetic knowledge-corruption injection.
///
/// The injected count is ceil(ratio * k_clean). Geometry per kind:
///  - clustered: injected pairwise similarity >= in_cluster_sim, similarity
///    to every clean passage <= cross_sim_cap.
///  - adaptive_dispersed: injected pairwise similarity <= cross_sim_cap while
///    each passage keeps the query-aligned component.
///  - multi_cluster: n_clusters tight groups, each with its own false answer.
///  - phantom: one shared instruction sentence and near-identical embeddings.
struct AttackSpec {
    AttackKind kind = AttackKind::clustered;
    double ratio = 1.0;
    double in_cluster_sim = 0.95;
    double cross_sim_cap = 0.35;
    std::size_t shared_keyword_count = 3;
    std::size_t n_clusters = 3;
    std::uint64_t seed = 0;
    /// Probability that a query's injected batch uses per-passage synonyms in
    /// place of the shared query keywords.
    double synonym_rate = 0.05;

    /// Throws InvalidConfig when an invariant does not hold.
    void validate() const;
};

/// Parameters of the built-in clean corpus: one golden passage plus
/// benign-but-tangential passages per query.
struct CleanCorpusSpec {
    std::size_t n_sets = 500;
    std::size_t k = 5;
    std::size_t dim = 64;
    std::uint64_t seed = 1;
};

std::vector<RetrievedSet> synthesize_clean_sets(const CleanCorpusSpec& spec);

/// Prepends injected passages (origin = injected) to a clean set. Deterministic
/// in spec.seed. Throws NoGoldenPassage, GeometryInfeasible.
RetrievedSet synthesize_attack(const RetrievedSet& clean, const AttackSpec& spec);

struct RunRecord {
    std::string query_id;
    std::string kind;  // attack kind, or "none" for clean runs
    double ratio = 0.0;
    std::size_t k = 0;
    std::size_t true_injected = 0;
    std::size_t n_adv_est = 0;
    std::size_t detected = 0;  // injected passages flagged
    std::size_t fp = 0;        // non-injected passages flagged
    bool golden_safe = true;
    /// Golden passage inside the group Stage 1 designated adversarial; unset
    /// when Stage 1 did not run.
    std::optional<bool> golden_mispartitioned;
};

/// Aggregate metrics. Rates are pooled over all runs; a rate is unset when
/// its denominator is zero.
struct EvalReport {
    std::optional<double> detection_rate;
    std::optional<double> false_positive_rate;
    std::optional<double> golden_retention;
    std::optional<double> mis_partition_rate;
    std::optional<double> nadv_mean_abs_error;
    std::vector<RunRecord> per_run;
};

/// Per-set seeds are spec.seed XOR set index, so results do not depend on
/// `jobs`.
EvalReport evaluate(const std::vector<RetrievedSet>& clean_sets, const AttackSpec& spec,
                    const DefenseConfig& config, std::size_t jobs = 1);

EvalReport evaluate_clean(const std::vector<RetrievedSet>& clean_sets, const DefenseConfig& config,
                          std::size_t jobs = 1);

/// Tallies one defended set against its origin labels.
RunRecord score_run(const RetrievedSet& set, const DefenseReport& report);
EvalReport aggregate(std::vector<RunRecord> runs);

struct ResponseScores {
    double asr = 0.0;
    double accuracy = 0.0;
};

/// Case-insensitive substring scoring of generator responses.
ResponseScores score_responses(const std::vector<std::string>& responses,
                               const std::vector<std::string>& target_answers,
                               const std::vector<std::string>& truth_answers);

nlohmann::json report_to_json(const EvalReport& report);
/// Header plus one row per run.
std::string report_to_csv(const EvalReport& report);

}  // namespace ragshield
