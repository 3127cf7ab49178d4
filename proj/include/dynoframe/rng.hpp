#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace df {

// Deterministic 64-bit generator used for every sampled value in the project.
// The integer stream is the splitmix64 finalizer sequence; Gaussians come from
// Box-Muller with a cached spare. Fixtures depend on this exact algorithm, so
// platform RNGs (std::mt19937, rand) must not leak into generated data.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53 bits of mantissa.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double next_range(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    // Uniform integer in [0, n). n must be > 0.
    uint64_t next_below(uint64_t n) {
        return next_u64() % n;
    }

    bool next_bernoulli(double p) {
        return next_unit() < p;
    }

    // Standard normal via Box-Muller; one spare kept between calls.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_unit();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = next_unit();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    // Stream derivation: runs both values through the finalizer so that
    // (seed, tag) and (seed, tag') give unrelated streams.
    static uint64_t mix(uint64_t a, uint64_t b) {
        SplitMix64 g(a ^ (0x9E3779B97F4A7C15ULL + b));
        return g.next_u64();
    }

private:
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// FNV-1a, used for file hashes in run manifests and for string-keyed streams.
inline uint64_t fnv1a64(const void* data, size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    uint64_t h = 0xCBF29CE484222325ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s) {
    return fnv1a64(s.data(), s.size());
}

} // namespace df
