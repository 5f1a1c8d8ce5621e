#include <random>

#include "capital_france.hpp"
#include "doctest.h"
#include "expect.hpp"
#include "oracles.hpp"
#include "ragshield/identify.hpp"

using namespace ragshield;

namespace {

oracle::Matrix planted(std::size_t k, const std::vector<std::size_t>& members, double inner, double outer) {
    oracle::Matrix s(k, std::vector<double>(k, outer));
    for (std::size_t i = 0; i < k; ++i) s[i][i] = 1.0;
    for (auto i : members)
        for (auto j : members)
            if (i != j) s[i][j] = inner;
    return s;
}

}  // namespace

TEST_CASE("pair budget") {
    CHECK(num_pairs(4) == 6);
    CHECK(num_pairs(0) == 1);
    CHECK(num_pairs(1) == 1);
    CHECK(num_pairs(2) == 1);
    CHECK(num_pairs(7) == 21);
    for (std::size_t n = 0; n < 40; ++n) CHECK(num_pairs(n) == oracle::choose2_floor1(n));
}

TEST_CASE("top pairs of the worked example avoid the golden passage") {
    auto pairs = top_similarity_pairs(capital_france::make_set(), 6);
    REQUIRE(pairs.size() == 6);
    for (const auto& p : pairs) {
        CHECK(p.i < p.j);
        CHECK(p.j != 4);
    }
    auto out = select_adversarial(capital_france::make_set(), 4, 2);
    CHECK(out.adversarial_ids == std::vector<std::string>{"p0", "p1", "p2", "p3"});
    CHECK(out.safe_ids == std::vector<std::string>{"p4"});
    REQUIRE(out.diagnostics.stage2.has_value());
    CHECK(out.diagnostics.stage2->n_pairs == 6);
}

TEST_CASE("two passages give the single pair") {
    auto pairs = top_similarity_pairs(oracle::set_from_matrix({{1, 0.2}, {0.2, 1}}), 1);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].i == 0);
    CHECK(pairs[0].j == 1);
}

TEST_CASE("top pairs match full enumeration and sort") {
    std::mt19937_64 rng(41);
    for (int t = 0; t < 2000; ++t) {
        auto s = oracle::random_matrix(rng, 6);
        std::size_t n = 1 + rng() % 15;
        auto got = top_similarity_pairs(oracle::set_from_matrix(s), n);
        auto expected = oracle::top_pairs(s, n);
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].i == expected[i].i);
            CHECK(got[i].j == expected[i].j);
            CHECK(got[i].sim == expected[i].sim);
        }
    }
}

TEST_CASE("frequency scores by hand") {
    auto set = oracle::set_from_matrix({{1, 0.9, 0.8}, {0.9, 1, -0.5}, {0.8, -0.5, 1}});
    std::vector<SimilarPair> pairs{{0, 1, 0.9}, {0, 2, 0.8}};
    auto f = frequency_scores(set, pairs, 2);
    CHECK(f[0] == doctest::Approx(1.45));
    CHECK(f[1] == doctest::Approx(0.81));
    CHECK(f[2] == doctest::Approx(0.64));

    auto g = frequency_scores(set, {{1, 2, -0.5}}, 2);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == doctest::Approx(-0.25));
    CHECK(g[2] == doctest::Approx(-0.25));

    // Flipping a contributing pair's sign lowers the score for even p.
    auto h = frequency_scores(set, {{1, 2, 0.5}}, 2);
    CHECK(h[1] > g[1]);
}

TEST_CASE("frequency scores permute with the passages") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 300; ++t) {
        std::size_t k = 3 + rng() % 5;
        oracle::Matrix s(k, std::vector<double>(k, 1.0));
        std::uniform_real_distribution<double> u(-1, 1);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j < k; ++j) s[i][j] = s[j][i] = u(rng);
        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        oracle::Matrix ps(k, std::vector<double>(k));
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) ps[i][j] = s[perm[i]][perm[j]];
        std::size_t n = 1 + rng() % (k * (k - 1) / 2);
        auto a = oracle::set_from_matrix(s), b = oracle::set_from_matrix(ps);
        auto fa = frequency_scores(a, top_similarity_pairs(a, n), 2);
        auto fb = frequency_scores(b, top_similarity_pairs(b, n), 2);
        for (std::size_t i = 0; i < k; ++i) CHECK(fb[i] == doctest::Approx(fa[perm[i]]).epsilon(1e-12));
    }
}

TEST_CASE("selection matches the subset-enumeration oracle") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 3000; ++t) {
        std::size_t k = 2 + rng() % 7;
        auto s = oracle::random_matrix(rng, k);
        std::size_t n_adv = rng() % k;
        unsigned p = 1 + static_cast<unsigned>(rng() % 3);
        auto out = select_adversarial(oracle::set_from_matrix(s), n_adv, p);
        CHECK(out.adversarial == oracle::select(s, n_adv, p));
        CHECK(out.n_adv == n_adv);
        CHECK(out.adversarial.size() + out.safe.size() == k);
        std::vector<bool> seen(k, false);
        for (auto i : out.adversarial) seen[i] = true;
        for (auto i : out.safe) {
            CHECK_FALSE(seen[i]);
            seen[i] = true;
        }
        CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
    }
}

TEST_CASE("n_adv of zero is all-safe and n_adv of k is refused") {
    auto set = capital_france::make_set();
    auto out = select_adversarial(set, 0, 2);
    CHECK(out.adversarial.empty());
    CHECK(out.safe.size() == 5);
    CHECK_FALSE(out.diagnostics.stage2.has_value());
    CHECK_ERROR_CODE(select_adversarial(set, 5, 2), ErrorCode::NadvOutOfRange);
}

TEST_CASE("planted clusters are recovered in random five-passage sets") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> inner(0.9, 1.0), outer(-0.3, 0.3);
    for (int t = 0; t < 1000; ++t) {
        std::size_t c = 2 + rng() % 3;
        std::vector<std::size_t> idx{0, 1, 2, 3, 4};
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<std::size_t> members(idx.begin(), idx.begin() + static_cast<long>(c));
        std::sort(members.begin(), members.end());
        oracle::Matrix s(5, std::vector<double>(5, 1.0));
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t j = i + 1; j < 5; ++j) {
                bool in = std::count(members.begin(), members.end(), i) && std::count(members.begin(), members.end(), j);
                s[i][j] = s[j][i] = in ? inner(rng) : outer(rng);
            }
        }
        auto out = select_adversarial(oracle::set_from_matrix(s), c, 2);
        CHECK(out.adversarial == members);
        CHECK(out.adversarial == oracle::select(s, c, 2));
    }
}

TEST_CASE("planted singleton at the front is recovered") {
    for (std::size_t k = 2; k <= 8; ++k) {
        auto out = select_adversarial(oracle::set_from_matrix(planted(k, {0}, 0.95, 0.2)), 1, 2);
        CHECK(out.adversarial == std::vector<std::size_t>{0});
    }
}
