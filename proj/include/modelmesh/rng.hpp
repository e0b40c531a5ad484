#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace modelmesh {

// All randomness in the project flows through this splitmix64 generator so
// that runs are bit-reproducible; std::* distributions are avoided on purpose
// (their draw sequences are implementation-defined).
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [0, bound) by rejection; bound must be > 0.
    uint64_t below(uint64_t bound) {
        const uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // Standard normal via Box-Muller (cosine branch only, stateless).
    double normal() {
        const double u1 = 1.0 - next_double();  // (0, 1], keeps log finite
        const double u2 = next_double();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (uint64_t i = v.size(); i > 1; --i) {
            const uint64_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

constexpr uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (const char c : s) {
        h ^= static_cast<uint8_t>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

// Labeled seed derivation: child = splitmix64(base ^ fnv1a64(label)).
// Every stochastic component takes its seed from here; the label set is
// documented in the README.
inline uint64_t derive_seed(uint64_t base, std::string_view label) {
    return Rng(base ^ fnv1a64(label)).next_u64();
}

// Indexed variant for per-client / per-round / per-tick streams.
inline uint64_t derive_seed(uint64_t base, std::string_view label, uint64_t index) {
    return Rng(derive_seed(base, label) ^ index).next_u64();
}

// Deterministic permutation of [0, n).
inline std::vector<uint32_t> random_permutation(uint32_t n, uint64_t seed) {
    std::vector<uint32_t> idx(n);
    for (uint32_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);
    return idx;
}

}  // namespace modelmesh
