#ifndef SVESIM_PATTERNS_HPP
#define SVESIM_PATTERNS_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sve {

// One exposure/gain combination. The product tau * alpha decides how early a
// pixel saturates and orders the levels everywhere below.
struct Level {
    double tau = 1.0;
    double alpha = 1.0;
    double product() const { return tau * alpha; }
};

inline bool level_less(const Level& a, const Level& b) {
    if (a.product() != b.product()) return a.product() < b.product();
    if (a.tau != b.tau) return a.tau < b.tau;
    return a.alpha < b.alpha;
}

inline bool level_equal(const Level& a, const Level& b) {
    return a.tau == b.tau && a.alpha == b.alpha;
}

// Admissible (tau, alpha) levels, sorted ascending by product with ties broken
// by tau then alpha. Exact duplicate pairs are merged; distinct pairs with
// equal products are kept because their noise behavior differs.
struct LevelSet {
    std::vector<Level> levels;

    static LevelSet from_levels(std::vector<Level> ls) {
        if (ls.empty()) throw std::invalid_argument("LevelSet: needs at least one level");
        for (const Level& l : ls)
            if (!(l.tau > 0.0) || !(l.alpha > 0.0))
                throw std::invalid_argument("LevelSet: tau and alpha must be positive");
        std::sort(ls.begin(), ls.end(), level_less);
        ls.erase(std::unique(ls.begin(), ls.end(), level_equal), ls.end());
        LevelSet out;
        out.levels = std::move(ls);
        return out;
    }

    // Three exposures crossed with three analog gains.
    static LevelSet default_nine() {
        std::vector<Level> ls;
        for (double tau : {0.25, 0.5, 1.0})
            for (double alpha : {1.0, 10.0, 80.0})
                ls.push_back({tau, alpha});
        return from_levels(std::move(ls));
    }

    int count() const { return static_cast<int>(levels.size()); }
};

// Exposure/gain assignment of one 2x2 tile, slots row-major:
// slot 0 = (0,0), slot 1 = (0,1), slot 2 = (1,0), slot 3 = (1,1).
struct Pattern {
    std::array<double, 4> tau{1.0, 1.0, 1.0, 1.0};
    std::array<double, 4> alpha{1.0, 1.0, 1.0, 1.0};

    Level level(int slot) const { return {tau[slot], alpha[slot]}; }

    static int slot_of(int row, int col) { return ((row & 1) << 1) | (col & 1); }

    Level level_at(int row, int col) const { return level(slot_of(row, col)); }

    void require_valid() const {
        for (int i = 0; i < 4; ++i)
            if (!(tau[i] > 0.0) || !(alpha[i] > 0.0))
                throw std::invalid_argument("Pattern: tau and alpha must be positive");
    }
};

inline bool operator==(const Pattern& a, const Pattern& b) {
    return a.tau == b.tau && a.alpha == b.alpha;
}

inline bool pattern_less(const Pattern& a, const Pattern& b) {
    for (int i = 0; i < 4; ++i) {
        if (a.tau[i] != b.tau[i]) return a.tau[i] < b.tau[i];
        if (a.alpha[i] != b.alpha[i]) return a.alpha[i] < b.alpha[i];
    }
    return false;
}

// Representative layout of a pattern equivalence class. With s0..s3 the four
// levels sorted ascending by product, the tile reads [[s0, s2], [s3, s1]]:
// products grow along the main diagonal first, and every level touches every
// other level inside a 3x3 window of the tiling.
struct CanonicalPattern {
    Pattern pattern;
};

inline bool operator==(const CanonicalPattern& a, const CanonicalPattern& b) {
    return a.pattern == b.pattern;
}

inline CanonicalPattern canonicalize(const Pattern& p) {
    p.require_valid();
    std::array<Level, 4> ls{p.level(0), p.level(1), p.level(2), p.level(3)};
    std::sort(ls.begin(), ls.end(), level_less);
    CanonicalPattern out;
    const std::array<int, 4> slot_rank{0, 2, 3, 1};  // rank placed at each slot
    for (int slot = 0; slot < 4; ++slot) {
        out.pattern.tau[slot] = ls[slot_rank[slot]].tau;
        out.pattern.alpha[slot] = ls[slot_rank[slot]].alpha;
    }
    return out;
}

// Level of the canonical tile by product rank (0 = smallest product).
inline Level canonical_level(const CanonicalPattern& cp, int rank) {
    static constexpr std::array<int, 4> rank_slot{0, 3, 1, 2};
    return cp.pattern.level(rank_slot[rank]);
}

// Product rank sitting at tile position (row & 1, col & 1) of the canonical
// layout [[0, 2], [3, 1]].
inline int canonical_rank_at(int row, int col) {
    static constexpr std::array<std::array<int, 2>, 2> grid{{{0, 2}, {3, 1}}};
    return grid[row & 1][col & 1];
}

inline bool is_canonical(const Pattern& p) {
    return canonicalize(p).pattern == p;
}

namespace detail {

inline std::uint64_t binomial_checked(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    if (k > n - k) k = n - k;
    unsigned __int128 acc = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        acc = acc * (n - k + i) / i;
        if (acc > static_cast<unsigned __int128>(UINT64_MAX))
            throw std::overflow_error("binomial_checked: result exceeds 64 bits");
    }
    return static_cast<std::uint64_t>(acc);
}

}  // namespace detail

// Number of pattern equivalence classes: sum over k of
// C(levels, k) * C(elements - 1, k - 1), i.e. level subsets of size k times
// compositions of the elements into k non-empty groups.
inline std::uint64_t class_count(int level_count, int element_count) {
    if (level_count <= 0 || element_count <= 0)
        throw std::invalid_argument("class_count: counts must be positive");
    const int kmax = std::min(level_count, element_count);
    std::uint64_t total = 0;
    for (int k = 1; k <= kmax; ++k) {
        const std::uint64_t a = detail::binomial_checked(level_count, k);
        const std::uint64_t b = detail::binomial_checked(element_count - 1, k - 1);
        if (b != 0 && a > UINT64_MAX / b)
            throw std::overflow_error("class_count: result exceeds 64 bits");
        const std::uint64_t term = a * b;
        if (total > UINT64_MAX - term)
            throw std::overflow_error("class_count: result exceeds 64 bits");
        total += term;
    }
    return total;
}

// Lexicographic k-combination odometer over {0, ..., n-1}. advance() scans
// from the rightmost index down for the first one that can still move, bumps
// it, and restarts every index after it in increasing order.
class CombinationIterator {
public:
    CombinationIterator(int n, int k) : n_(n), k_(k) {
        if (n < 0 || k < 0 || k > n)
            throw std::invalid_argument("CombinationIterator: need 0 <= k <= n");
        indices_.resize(k_);
        for (int i = 0; i < k_; ++i) indices_[i] = i;
        done_ = false;
        emitted_first_ = false;
    }

    // Writes the next combination into out; false once exhausted.
    bool next(std::vector<int>& out) {
        if (done_) return false;
        if (emitted_first_ && !advance()) {
            done_ = true;
            return false;
        }
        emitted_first_ = true;
        out = indices_;
        if (k_ == 0) done_ = true;  // single empty combination
        return true;
    }

private:
    bool advance() {
        int i = k_ - 1;
        while (i >= 0 && indices_[i] == n_ - k_ + i) --i;
        if (i < 0) return false;
        ++indices_[i];
        for (int j = i + 1; j < k_; ++j) indices_[j] = indices_[j - 1] + 1;
        return true;
    }

    int n_, k_;
    std::vector<int> indices_;
    bool done_;
    bool emitted_first_;
};

// Convenience wrapper yielding k-element sublists of options.
template <typename T>
class CombinationStream {
public:
    CombinationStream(int k, std::vector<T> options)
        : options_(std::move(options)), it_(static_cast<int>(options_.size()), k) {}

    bool next(std::vector<T>& out) {
        if (!it_.next(scratch_)) return false;
        out.clear();
        out.reserve(scratch_.size());
        for (int idx : scratch_) out.push_back(options_[idx]);
        return true;
    }

private:
    std::vector<T> options_;
    CombinationIterator it_;
    std::vector<int> scratch_;
};

// Every multiset of level indices realizable on element_count elements, as
// ascending index lists. Order: group count k ascending, then the level
// combination in lexicographic order, then the element split in lexicographic
// order. This order is stable and part of the interface.
inline std::vector<std::vector<int>> enumerate_level_multisets(int level_count, int element_count) {
    if (level_count <= 0 || element_count <= 0)
        throw std::invalid_argument("enumerate_level_multisets: counts must be positive");
    std::vector<std::vector<int>> out;
    const int kmax = std::min(level_count, element_count);
    std::vector<int> chosen, cuts;
    for (int k = 1; k <= kmax; ++k) {
        CombinationIterator level_it(level_count, k);
        while (level_it.next(chosen)) {
            // k - 1 cut positions out of {1, ..., element_count - 1} split the
            // element run into k non-empty segments.
            CombinationIterator cut_it(element_count - 1, k - 1);
            while (cut_it.next(cuts)) {
                std::vector<int> assignment(element_count);
                int seg = 0;
                for (int e = 0; e < element_count; ++e) {
                    while (seg < static_cast<int>(cuts.size()) && e >= cuts[seg] + 1) ++seg;
                    assignment[e] = chosen[seg];
                }
                out.push_back(std::move(assignment));
            }
        }
    }
    return out;
}

// All 2x2 pattern equivalence classes over the level set, one canonical
// representative each, in the enumeration order documented above.
inline std::vector<CanonicalPattern> enumerate_classes(const LevelSet& levels) {
    const auto multisets = enumerate_level_multisets(levels.count(), 4);
    std::vector<CanonicalPattern> out;
    out.reserve(multisets.size());
    for (const auto& ms : multisets) {
        Pattern p;
        for (int slot = 0; slot < 4; ++slot) {
            const Level l = levels.levels[ms[slot]];
            p.tau[slot] = l.tau;
            p.alpha[slot] = l.alpha;
        }
        out.push_back(canonicalize(p));
    }
    return out;
}

}  // namespace sve

#endif
