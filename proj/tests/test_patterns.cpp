#include <catch_amalgamated.hpp>

#include <set>
#include <vector>

#include "oracles.hpp"
#include "svesim/patterns.hpp"

using namespace sve;

namespace {

Pattern make_pattern(std::array<double, 4> tau, std::array<double, 4> alpha) {
    Pattern p;
    p.tau = tau;
    p.alpha = alpha;
    return p;
}

std::vector<int> multiset_key(const CanonicalPattern& cp, const LevelSet& levels) {
    std::vector<int> key;
    for (int slot = 0; slot < 4; ++slot) {
        const Level l = cp.pattern.level(slot);
        for (int i = 0; i < levels.count(); ++i)
            if (level_equal(l, levels.levels[i])) {
                key.push_back(i);
                break;
            }
    }
    std::sort(key.begin(), key.end());
    return key;
}

}  // namespace

TEST_CASE("levels order by product with tau tie-break") {
    const LevelSet ls = LevelSet::default_nine();
    REQUIRE(ls.count() == 9);
    const std::vector<double> expected{0.25, 0.5, 1.0, 2.5, 5.0, 10.0, 20.0, 40.0, 80.0};
    for (int i = 0; i < 9; ++i)
        REQUIRE(ls.levels[i].product() == Catch::Approx(expected[i]).epsilon(1e-12));
    for (int i = 1; i < 9; ++i)
        REQUIRE(ls.levels[i - 1].product() < ls.levels[i].product());
}

TEST_CASE("level set validation") {
    REQUIRE_THROWS_AS(LevelSet::from_levels({}), std::invalid_argument);
    REQUIRE_THROWS_AS(LevelSet::from_levels({{0.0, 1.0}}), std::invalid_argument);
    REQUIRE_THROWS_AS(LevelSet::from_levels({{1.0, -2.0}}), std::invalid_argument);
    const LevelSet dedup = LevelSet::from_levels({{1.0, 2.0}, {1.0, 2.0}, {0.5, 1.0}});
    REQUIRE(dedup.count() == 2);
    // equal products with different tau stay distinct, sorted by tau
    const LevelSet ties = LevelSet::from_levels({{1.0, 2.0}, {2.0, 1.0}});
    REQUIRE(ties.count() == 2);
    REQUIRE(ties.levels[0].tau == 1.0);
    REQUIRE(ties.levels[1].tau == 2.0);
}

TEST_CASE("slot layout is the standard 2x2 tiling") {
    REQUIRE(Pattern::slot_of(0, 0) == 0);
    REQUIRE(Pattern::slot_of(0, 1) == 1);
    REQUIRE(Pattern::slot_of(1, 0) == 2);
    REQUIRE(Pattern::slot_of(1, 1) == 3);
    REQUIRE(Pattern::slot_of(2, 3) == Pattern::slot_of(0, 1));  // periodic
}

TEST_CASE("canonical layout places ranks on the fixed grid") {
    REQUIRE(canonical_rank_at(0, 0) == 0);
    REQUIRE(canonical_rank_at(0, 1) == 2);
    REQUIRE(canonical_rank_at(1, 0) == 3);
    REQUIRE(canonical_rank_at(1, 1) == 1);
    REQUIRE(canonical_rank_at(2, 2) == 0);  // periodic
}

TEST_CASE("canonicalization sorts by product onto the grid") {
    // distinct exposures, unit gain
    const Pattern p = make_pattern({8, 32, 1, 10}, {1, 1, 1, 1});
    const CanonicalPattern cp = canonicalize(p);
    REQUIRE(cp.pattern.level_at(0, 0).tau == 1.0);
    REQUIRE(cp.pattern.level_at(0, 1).tau == 10.0);
    REQUIRE(cp.pattern.level_at(1, 0).tau == 32.0);
    REQUIRE(cp.pattern.level_at(1, 1).tau == 8.0);
    REQUIRE(is_canonical(cp.pattern));
}

TEST_CASE("canonicalization handles duplicate products") {
    const Pattern p = make_pattern({1, 10, 1, 10}, {1, 1, 1, 1});
    const CanonicalPattern cp = canonicalize(p);
    REQUIRE(cp.pattern.level_at(0, 0).tau == 1.0);
    REQUIRE(cp.pattern.level_at(0, 1).tau == 10.0);
    REQUIRE(cp.pattern.level_at(1, 0).tau == 10.0);
    REQUIRE(cp.pattern.level_at(1, 1).tau == 1.0);
}

TEST_CASE("canonicalization is idempotent and permutation-invariant") {
    const Pattern base = make_pattern({0.25, 1.0, 0.5, 1.0}, {80, 1, 10, 10});
    const CanonicalPattern cp = canonicalize(base);
    REQUIRE(canonicalize(cp.pattern) == cp);
    // all 24 slot permutations land on the same canonical pattern
    std::array<int, 4> perm{0, 1, 2, 3};
    do {
        Pattern q;
        for (int s = 0; s < 4; ++s) {
            q.tau[s] = base.tau[perm[s]];
            q.alpha[s] = base.alpha[perm[s]];
        }
        REQUIRE(canonicalize(q) == cp);
    } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("canonical grid orders products ascending by rank") {
    const Pattern p = make_pattern({0.25, 0.5, 1.0, 0.25}, {80, 10, 1, 1});
    const CanonicalPattern cp = canonicalize(p);
    const double p0 = cp.pattern.level_at(0, 0).product();
    const double p1 = cp.pattern.level_at(1, 1).product();
    const double p2 = cp.pattern.level_at(0, 1).product();
    const double p3 = cp.pattern.level_at(1, 0).product();
    REQUIRE(p0 <= p1);
    REQUIRE(p1 <= p2);
    REQUIRE(p2 <= p3);
    for (int rank = 0; rank < 4; ++rank) {
        const Level l = canonical_level(cp, rank);
        const double expected = rank == 0 ? p0 : rank == 1 ? p1 : rank == 2 ? p2 : p3;
        REQUIRE(l.product() == expected);
    }
}

TEST_CASE("pattern validation rejects nonpositive settings") {
    REQUIRE_THROWS_AS(make_pattern({1, 1, 1, 0}, {1, 1, 1, 1}).require_valid(),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(make_pattern({1, 1, 1, 1}, {1, -1, 1, 1}).require_valid(),
                      std::invalid_argument);
}

TEST_CASE("class count formula") {
    REQUIRE(class_count(9, 4) == 495);
    REQUIRE(class_count(1, 4) == 1);
    REQUIRE(class_count(3, 2) == 6);
    REQUIRE(class_count(2, 4) == 5);
    REQUIRE(class_count(5, 1) == 5);
    REQUIRE_THROWS_AS(class_count(0, 4), std::invalid_argument);
    REQUIRE_THROWS_AS(class_count(4, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(class_count(100000, 60), std::overflow_error);
}

TEST_CASE("class count equals brute force for small sizes") {
    for (int L = 1; L <= 5; ++L)
        for (int M = 1; M <= 4; ++M)
            REQUIRE(class_count(L, M) == oracle::brute_force_classes(L, M).size());
}

TEST_CASE("combination iterator enumerates lexicographically") {
    CombinationIterator it(5, 3);
    std::vector<std::vector<int>> all;
    std::vector<int> comb;
    while (it.next(comb)) all.push_back(comb);
    REQUIRE(all.size() == 10);
    REQUIRE(all.front() == std::vector<int>{0, 1, 2});
    REQUIRE(all.back() == std::vector<int>{2, 3, 4});
    for (std::size_t i = 1; i < all.size(); ++i) REQUIRE(all[i - 1] < all[i]);

    CombinationIterator empty(4, 0);
    int count = 0;
    while (empty.next(comb)) {
        REQUIRE(comb.empty());
        ++count;
    }
    REQUIRE(count == 1);
}

TEST_CASE("multiset enumeration matches brute force") {
    for (int L = 1; L <= 5; ++L) {
        for (int M = 1; M <= 4; ++M) {
            const auto enumerated = enumerate_level_multisets(L, M);
            std::set<std::vector<int>> as_set;
            for (auto a : enumerated) {
                std::sort(a.begin(), a.end());
                as_set.insert(a);
            }
            REQUIRE(as_set.size() == enumerated.size());  // no duplicates
            REQUIRE(as_set == oracle::brute_force_classes(L, M));
        }
    }
}

TEST_CASE("enumerate_classes covers every equivalence class exactly once") {
    const LevelSet nine = LevelSet::default_nine();
    const auto classes = enumerate_classes(nine);
    REQUIRE(classes.size() == 495);
    std::set<std::vector<int>> keys;
    for (const auto& cp : classes) {
        REQUIRE(is_canonical(cp.pattern));
        keys.insert(multiset_key(cp, nine));
    }
    REQUIRE(keys.size() == 495);
    REQUIRE(keys == oracle::brute_force_classes(9, 4));
}

TEST_CASE("enumerate_classes for a custom two-level set") {
    const LevelSet two = LevelSet::from_levels({{0.5, 1.0}, {1.0, 4.0}});
    const auto classes = enumerate_classes(two);
    REQUIRE(classes.size() == 5);
    std::set<std::vector<int>> keys;
    for (const auto& cp : classes) keys.insert(multiset_key(cp, two));
    REQUIRE(keys == oracle::brute_force_classes(2, 4));
}
