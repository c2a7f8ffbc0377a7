#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace strainiq {

// All randomized procedures in the library draw from this wrapper instead of
// <random> distributions. The mt19937_64 engine output sequence is fixed by
// the standard, and the index/real mappings below are spelled out here, so a
// given seed produces the same stream on every platform and toolchain.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random mantissa bits.
    double next_real01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Unbiased uniform index in [0, n) via masked rejection.
    std::size_t next_index(std::size_t n) {
        std::uint64_t mask = n - 1;
        mask |= mask >> 1;
        mask |= mask >> 2;
        mask |= mask >> 4;
        mask |= mask >> 8;
        mask |= mask >> 16;
        mask |= mask >> 32;
        while (true) {
            std::uint64_t v = engine_() & mask;
            if (v < n) return static_cast<std::size_t>(v);
        }
    }

    // Fisher-Yates, high index down.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = next_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed, e.g. one per permutation index, so
// parallel consumers never share an engine.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace strainiq
