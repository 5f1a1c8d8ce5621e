#include <random>

#include "doctest.h"
#include "expect.hpp"
#include "oracles.hpp"
#include "ragshield/core.hpp"

using namespace ragshield;

TEST_CASE("cosine similarity on hand-computed vectors") {
    std::vector<double> a{1, 0}, b{0, 1};
    CHECK(cosine_similarity(a, a) == 1.0);
    CHECK(cosine_similarity(a, b) == 0.0);
    std::vector<double> c{1, 2, 3}, d{4, 5, 6};
    CHECK(cosine_similarity(c, d) == doctest::Approx(32.0 / std::sqrt(14.0 * 77.0)).epsilon(1e-12));
    CHECK(cosine_similarity(c, d) == doctest::Approx(0.974631846).epsilon(1e-6));
}

TEST_CASE("cosine similarity rejects bad input") {
    std::vector<double> a{1, 0}, z{0, 0}, c{1, 2, 3};
    CHECK_ERROR_CODE(cosine_similarity(a, z), ErrorCode::ZeroNormVector);
    CHECK_ERROR_CODE(cosine_similarity(a, c), ErrorCode::DimensionMismatch);
}

TEST_CASE("cosine similarity is clamped, symmetric and scale invariant") {
    std::vector<double> a{0.1, 0.2, 0.3}, b{0.1, 0.2, 0.3000000000000001};
    double s = cosine_similarity(a, b);
    CHECK(s <= 1.0);
    CHECK(s >= -1.0);

    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0, 1);
    std::uniform_real_distribution<double> scale(0.001, 1000.0);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> x(8), y(8);
        for (auto& v : x) v = n(rng);
        for (auto& v : y) v = n(rng);
        double alpha = scale(rng);
        std::vector<double> ax(x);
        for (auto& v : ax) v *= alpha;
        CHECK(std::abs(cosine_similarity(x, y) - cosine_similarity(y, x)) < 1e-9);
        CHECK(std::abs(cosine_similarity(ax, y) - cosine_similarity(x, y)) < 1e-9);
        CHECK(std::abs(cosine_similarity(x, y) - oracle::cosine(x, y)) < 1e-9);
    }
}

TEST_CASE("build_retrieved_set caches agree with per-pair cosine") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 1);
    for (std::size_t d : {4u, 64u, 1024u}) {
        Query q{"q", "query", Vector(d)};
        for (auto& v : q.embedding) v = n(rng);
        std::vector<Passage> ps;
        for (int i = 0; i < 7; ++i) {
            Passage p{"p" + std::to_string(i), "t", Vector(d), {}};
            for (auto& v : p.embedding) v = n(rng);
            ps.push_back(p);
        }
        auto set = build_retrieved_set(q, ps);
        REQUIRE(set.size() == 7);
        for (std::size_t i = 0; i < 7; ++i) {
            CHECK(std::abs(set.query_sim(i) - oracle::cosine(q.embedding, ps[i].embedding)) < 1e-9);
            CHECK(set.pair_sim(i, i) == 1.0);
            for (std::size_t j = 0; j < 7; ++j) {
                CHECK(std::abs(set.pair_sim(i, j) - oracle::cosine(ps[i].embedding, ps[j].embedding)) < 1e-9);
                CHECK(set.pair_sim(i, j) == set.pair_sim(j, i));
            }
        }
    }
}

TEST_CASE("build_retrieved_set validation") {
    Query q{"q", "query", {1, 0, 0}};
    SUBCASE("singleton") {
        auto set = build_retrieved_set(q, {{"r1", "x", {0, 1, 0}, {}}});
        CHECK(set.size() == 1);
        CHECK(set.pair_sim(0, 0) == 1.0);
    }
    SUBCASE("duplicate id") {
        CHECK_ERROR_CODE(build_retrieved_set(q, {{"r", "x", {0, 1, 0}, {}}, {"r", "y", {1, 1, 0}, {}}}),
                         ErrorCode::DuplicateId);
    }
    SUBCASE("dimension mismatch names the passage") {
        try {
            build_retrieved_set(q, {{"r1", "x", {0, 1, 0}, {}}, {"bad-one", "y", {1, 1}, {}}});
            FAIL("expected DimensionMismatch");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DimensionMismatch);
            CHECK(std::string(e.what()).find("bad-one") != std::string::npos);
        }
    }
    SUBCASE("zero norm") {
        CHECK_ERROR_CODE(build_retrieved_set(q, {{"r1", "x", {0, 0, 0}, {}}}), ErrorCode::ZeroNormVector);
    }
    SUBCASE("empty set is allowed") { CHECK(build_retrieved_set(q, {}).size() == 0); }
    SUBCASE("index_of") {
        auto set = build_retrieved_set(q, {{"a", "x", {0, 1, 0}, {}}, {"b", "y", {1, 1, 0}, {}}});
        CHECK(set.index_of("b") == 1u);
        CHECK_FALSE(set.index_of("zzz").has_value());
    }
}

TEST_CASE("from_similarities rejects inconsistent matrices") {
    Query q{"q", "query", {}};
    std::vector<Passage> ps{{"a", "x", {}, {}}, {"b", "y", {}, {}}};
    SimilarityMatrix m(2);
    m(0, 0) = m(1, 1) = 1.0;
    m(0, 1) = 0.5;
    m(1, 0) = 0.4;
    CHECK_ERROR_CODE(RetrievedSet::from_similarities(q, ps, {0.1, 0.2}, m), ErrorCode::InvalidSimilarity);
    m(1, 0) = 0.5;
    CHECK_ERROR_CODE(RetrievedSet::from_similarities(q, ps, {0.1, 1.5}, m), ErrorCode::InvalidSimilarity);
    CHECK(RetrievedSet::from_similarities(q, ps, {0.1, 0.2}, m).pair_sim(1, 0) == 0.5);
}

TEST_CASE("rank_top_k examples") {
    using Items = std::vector<std::pair<std::string, double>>;
    CHECK(rank_top_k<std::string>(Items{{"a", 0.9}, {"b", 0.5}}, 1) == std::vector<std::string>{"a"});
    CHECK(rank_top_k<std::string>(Items{{"a", 0.5}, {"b", 0.5}}, 1) == std::vector<std::string>{"a"});
    CHECK(rank_top_k<std::string>(Items{{"b", 0.5}, {"a", 0.5}}, 1) == std::vector<std::string>{"a"});
    CHECK(rank_top_k<std::string>(Items{{"a", 0.1}, {"b", 0.7}, {"c", 0.4}}, 2) ==
          std::vector<std::string>{"b", "c"});
    CHECK(rank_top_k<std::string>(Items{}, 0).empty());
    CHECK_ERROR_CODE(rank_top_k<std::string>(Items{{"a", 1.0}}, 2), ErrorCode::KTooLarge);
}

TEST_CASE("rank_top_k is a prefix of the full sort") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 300; ++t) {
        std::size_t n = 1 + rng() % 12;
        std::vector<std::pair<std::size_t, double>> items;
        for (std::size_t i = 0; i < n; ++i) items.emplace_back(i, double(rng() % 5) / 4.0);
        auto full = items;
        std::sort(full.begin(), full.end(), [](auto& a, auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        std::size_t top = rng() % (n + 1);
        auto got = rank_top_k<std::size_t>(items, top);
        REQUIRE(got.size() == top);
        for (std::size_t i = 0; i < top; ++i) CHECK(got[i] == full[i].first);
        CHECK(rank_top_k<std::size_t>(items, top) == got);
    }
}

TEST_CASE("config validation and enum parsing") {
    DefenseConfig c;
    CHECK_NOTHROW(c.validate());
    c.m = 0;
    CHECK_ERROR_CODE(c.validate(), ErrorCode::InvalidConfig);
    c = {};
    c.p = 0;
    CHECK_ERROR_CODE(c.validate(), ErrorCode::InvalidConfig);
    c = {};
    c.stage2_only_fraction = {2, 2};
    CHECK_ERROR_CODE(c.validate(), ErrorCode::InvalidConfig);

    CHECK(parse_strategy("concentration") == Strategy::concentration);
    CHECK_FALSE(parse_strategy("auto").has_value());
    CHECK(parse_stage_mode("stage2_only") == StageMode::stage2_only);
    CHECK(parse_origin("golden") == Origin::golden);
    CHECK(to_string(StageMode::stage1_only) == "stage1_only");
}
