#pragma once

#include <cstdint>
#include <vector>

namespace learnet {

// SplitMix64 generator. Every random draw in the project goes through this
// class so that results are bit-identical across platforms and runs; the
// standard <random> distributions are implementation-defined and unusable
// for that purpose.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    float uniform_f(float lo, float hi) {
        return static_cast<float>(uniform(static_cast<double>(lo), static_cast<double>(hi)));
    }

    // Integer in [0, n). The modulo bias is ~n/2^64, irrelevant at our sizes.
    uint64_t below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

private:
    uint64_t state_;
};

// Derives an independent stream from a base seed and a salt. Used to give
// each consumer (init, shuffle, dropout, ...) its own stream.
inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t z = seed ^ (salt * 0x9E3779B97F4A7C15ull + 0x2545F4914F6CDD1Dull);
    z = (z ^ (z >> 33)) * 0xFF51AFD7ED558CCDull;
    z = (z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53ull;
    return z ^ (z >> 33);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b) {
    return mix_seed(mix_seed(seed, a), b);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
    return mix_seed(mix_seed(seed, a, b), c);
}

// Fisher-Yates shuffle driven by Rng; std::shuffle consumes the engine in an
// implementation-defined way.
template <typename T>
void deterministic_shuffle(std::vector<T>& xs, Rng& rng) {
    for (size_t i = xs.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.below(i));
        std::swap(xs[i - 1], xs[j]);
    }
}

}  // namespace learnet
