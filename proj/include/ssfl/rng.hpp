#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ssfl {

// All randomness in the library flows from one root seed through named
// substreams, so any unit of work (an episode, a CST pass, a network init)
// can be re-run in isolation from its recorded seed. Draws are implemented
// on top of the raw mt19937_64 bit stream; std::*_distribution is avoided
// because its output is implementation-defined.

namespace stream {
inline constexpr std::uint64_t episode = 1;
inline constexpr std::uint64_t cst = 2;
inline constexpr std::uint64_t sin_init = 3;
inline constexpr std::uint64_t sin_train = 4;
inline constexpr std::uint64_t sampling = 5;
inline constexpr std::uint64_t synth = 6;
}  // namespace stream

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Substream seed for (root, stream, index).
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream_id,
                                 std::uint64_t index = 0) {
    return mix64(mix64(root ^ mix64(stream_id)) + index);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (two uniforms per draw).
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    // Uniform integer in [0, n) without modulo bias.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = eng_();
            if (r >= threshold) return r % n;
        }
    }

    // Fisher-Yates; std::shuffle is implementation-defined, this is not.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from {0, ..., n-1}, in draw order.
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> pool(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            std::size_t j = static_cast<std::size_t>(bounded(pool.size() - static_cast<std::size_t>(i)));
            std::swap(pool[j], pool[pool.size() - 1 - static_cast<std::size_t>(i)]);
            out.push_back(pool[pool.size() - 1 - static_cast<std::size_t>(i)]);
        }
        return out;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace ssfl
