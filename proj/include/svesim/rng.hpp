#ifndef SVESIM_RNG_HPP
#define SVESIM_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace sve {

// Philox4x32-10 counter-based generator. The key is the 64-bit seed, the
// counter carries (block index, stream id), so any stream of any seed can be
// evaluated independently and in any order. Per-pixel simulation derives one
// stream per (pixel index, purpose) and stays reproducible under parallelism.
class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t stream)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          stream0_(static_cast<std::uint32_t>(stream)),
          stream1_(static_cast<std::uint32_t>(stream >> 32)) {}

    std::uint32_t next_u32() {
        if (idx_ == 4) refill();
        return out_[idx_++];
    }

    // 53-bit uniform, strictly inside (0, 1).
    double next_double() {
        const std::uint64_t hi = next_u32();
        const std::uint64_t lo = next_u32();
        const std::uint64_t bits = ((hi << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1p-53;
    }

    double next_normal() {
        const double u1 = next_double();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    // Poisson sampling: product-of-uniforms for small means, Hormann's
    // transformed rejection (PTRS) for large means.
    long long next_poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        if (mean < 10.0) {
            const double limit = std::exp(-mean);
            long long k = 0;
            double prod = next_double();
            while (prod > limit) {
                ++k;
                prod *= next_double();
            }
            return k;
        }
        const double b = 0.931 + 2.53 * std::sqrt(mean);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        const double log_mean = std::log(mean);
        for (;;) {
            const double u = next_double() - 0.5;
            const double v = next_double();
            const double us = 0.5 - std::fabs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<long long>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            const double k = kf;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                k * log_mean - mean - std::lgamma(k + 1.0))
                return static_cast<long long>(kf);
        }
    }

private:
    void refill() {
        std::uint32_t c0 = static_cast<std::uint32_t>(block_);
        std::uint32_t c1 = static_cast<std::uint32_t>(block_ >> 32);
        std::uint32_t c2 = stream0_;
        std::uint32_t c3 = stream1_;
        std::uint32_t k0 = key0_;
        std::uint32_t k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * c0;
            const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * c2;
            const std::uint32_t n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
            const std::uint32_t n1 = static_cast<std::uint32_t>(p1);
            const std::uint32_t n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
            const std::uint32_t n3 = static_cast<std::uint32_t>(p0);
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        out_ = {c0, c1, c2, c3};
        idx_ = 0;
        ++block_;
    }

    std::uint32_t key0_, key1_;
    std::uint32_t stream0_, stream1_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> out_{};
    int idx_ = 4;
};

// splitmix64 step, used to derive child seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace sve

#endif
