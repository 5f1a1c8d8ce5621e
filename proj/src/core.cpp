#include "ragshield/core.hpp"

#include <cmath>
#include <unordered_set>

namespace ragshield {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ZeroNormVector: return "ZeroNormVector";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::SetTooSmall: return "SetTooSmall";
        case ErrorCode::NadvOutOfRange: return "NadvOutOfRange";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::InvalidSimilarity: return "InvalidSimilarity";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::MissingEmbedding: return "MissingEmbedding";
        case ErrorCode::ServiceUnreachable: return "ServiceUnreachable";
        case ErrorCode::MalformedResponse: return "MalformedResponse";
        case ErrorCode::NoGoldenPassage: return "NoGoldenPassage";
        case ErrorCode::GeometryInfeasible: return "GeometryInfeasible";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

std::string_view to_string(Origin origin) {
    switch (origin) {
        case Origin::corpus: return "corpus";
        case Origin::injected: return "injected";
        case Origin::golden: return "golden";
    }
    return "corpus";
}

std::optional<Origin> parse_origin(std::string_view text) {
    if (text == "corpus") return Origin::corpus;
    if (text == "injected") return Origin::injected;
    if (text == "golden") return Origin::golden;
    return std::nullopt;
}

std::string_view to_string(Strategy s) {
    return s == Strategy::clustering ? "clustering" : "concentration";
}

std::string_view to_string(StageMode m) {
    switch (m) {
        case StageMode::both: return "both";
        case StageMode::stage1_only: return "stage1_only";
        case StageMode::stage2_only: return "stage2_only";
    }
    return "both";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
    if (text == "clustering") return Strategy::clustering;
    if (text == "concentration") return Strategy::concentration;
    return std::nullopt;
}

std::optional<StageMode> parse_stage_mode(std::string_view text) {
    if (text == "both") return StageMode::both;
    if (text == "stage1_only" || text == "stage1") return StageMode::stage1_only;
    if (text == "stage2_only" || text == "stage2") return StageMode::stage2_only;
    return std::nullopt;
}

void DefenseConfig::validate() const {
    if (m < 1) throw Error(ErrorCode::InvalidConfig, "m must be >= 1");
    if (p < 1) throw Error(ErrorCode::InvalidConfig, "p must be >= 1");
    if (token_min_len < 1) throw Error(ErrorCode::InvalidConfig, "token_min_len must be >= 1");
    const auto& f = stage2_only_fraction;
    if (f.denominator == 0 || f.numerator == 0 || f.numerator >= f.denominator) {
        throw Error(ErrorCode::InvalidConfig, "stage2_only_fraction must lie strictly in (0, 1)");
    }
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "cosine_similarity: dimensions " + std::to_string(a.size()) + " and " +
                        std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (!(na > 0.0) || !(nb > 0.0)) {
        throw Error(ErrorCode::ZeroNormVector, "cosine_similarity: zero-norm vector");
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

namespace {

void check_unique_ids(const std::vector<Passage>& passages) {
    std::unordered_set<std::string_view> seen;
    for (const auto& p : passages) {
        if (!seen.insert(p.id).second) {
            throw Error(ErrorCode::DuplicateId, "duplicate passage id '" + p.id + "'");
        }
    }
}

}  // namespace

RetrievedSet build_retrieved_set(Query query, std::vector<Passage> passages) {
    check_unique_ids(passages);
    const std::size_t d = query.embedding.size();
    if (d < 2) {
        throw Error(ErrorCode::DimensionMismatch,
                    "query '" + query.id + "' embedding has dimension " + std::to_string(d) +
                        " (need >= 2)");
    }
    for (const auto& p : passages) {
        if (p.embedding.size() != d) {
            throw Error(ErrorCode::DimensionMismatch,
                        "passage '" + p.id + "' has dimension " +
                            std::to_string(p.embedding.size()) + ", expected " +
                            std::to_string(d));
        }
    }

    const std::size_t k = passages.size();
    // Unit vectors once, then plain dot products; matches the per-pair cosine
    // to well within 1e-12.
    auto unit = [](const Passage& p) {
        double n = 0.0;
        for (double x : p.embedding) n += x * x;
        if (!(n > 0.0)) {
            throw Error(ErrorCode::ZeroNormVector, "passage '" + p.id + "' has zero norm");
        }
        n = std::sqrt(n);
        Vector u(p.embedding.size());
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = p.embedding[i] / n;
        return u;
    };
    std::vector<Vector> units;
    units.reserve(k);
    for (const auto& p : passages) units.push_back(unit(p));

    RetrievedSet set;
    set.query_sims_.reserve(k);
    for (const auto& p : passages) {
        set.query_sims_.push_back(cosine_similarity(query.embedding, p.embedding));
    }
    set.pair_sims_ = SimilarityMatrix(k);
    for (std::size_t i = 0; i < k; ++i) {
        set.pair_sims_(i, i) = 1.0;
        for (std::size_t j = i + 1; j < k; ++j) {
            double dot = 0.0;
            for (std::size_t t = 0; t < d; ++t) dot += units[i][t] * units[j][t];
            dot = std::clamp(dot, -1.0, 1.0);
            set.pair_sims_(i, j) = dot;
            set.pair_sims_(j, i) = dot;
        }
    }
    set.query_ = std::move(query);
    set.passages_ = std::move(passages);
    return set;
}

RetrievedSet RetrievedSet::from_similarities(Query query, std::vector<Passage> passages,
                                             std::vector<double> query_sims,
                                             SimilarityMatrix pair_sims) {
    check_unique_ids(passages);
    const std::size_t k = passages.size();
    if (query_sims.size() != k || pair_sims.size() != k) {
        throw Error(ErrorCode::DimensionMismatch,
                    "similarity caches do not match passage count " + std::to_string(k));
    }
    constexpr double tol = 1e-9;
    for (std::size_t i = 0; i < k; ++i) {
        if (!(query_sims[i] >= -1.0 - tol && query_sims[i] <= 1.0 + tol)) {
            throw Error(ErrorCode::InvalidSimilarity, "query similarity out of [-1, 1]");
        }
        if (std::abs(pair_sims(i, i) - 1.0) > tol) {
            throw Error(ErrorCode::InvalidSimilarity, "pair similarity diagonal must be 1");
        }
        for (std::size_t j = 0; j < k; ++j) {
            double v = pair_sims(i, j);
            if (!(v >= -1.0 - tol && v <= 1.0 + tol) ||
                std::abs(v - pair_sims(j, i)) > tol) {
                throw Error(ErrorCode::InvalidSimilarity,
                            "pair similarities must be symmetric and within [-1, 1]");
            }
        }
    }
    RetrievedSet set;
    set.query_ = std::move(query);
    set.passages_ = std::move(passages);
    set.query_sims_ = std::move(query_sims);
    set.pair_sims_ = std::move(pair_sims);
    return set;
}

std::optional<std::size_t> RetrievedSet::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < passages_.size(); ++i) {
        if (passages_[i].id == id) return i;
    }
    return std::nullopt;
}

}  // namespace ragshield
