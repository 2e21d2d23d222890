#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fedchain/bytes.hpp"

namespace fedchain {

// All randomness flows through mt19937_64 plus the hand-rolled draws below.
// std::uniform_*_distribution and std::shuffle are implementation-defined,
// which would break byte-identical reruns across standard libraries.
using Rng = std::mt19937_64;

// Uniform integer in [0, n), unbiased via rejection sampling. n >= 1.
inline std::uint64_t uniform_u64(Rng& rng, std::uint64_t n) {
    const std::uint64_t reject = (0 - n) % n;  // 2^64 mod n
    for (;;) {
        const std::uint64_t x = rng();
        if (x >= reject) return (x - reject) % n;
    }
}

// Uniform real in [lo, hi) with 53 bits of precision.
inline double uniform_real(Rng& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

// Standard normal draw (Box-Muller on the deterministic uniform above).
inline double normal(Rng& rng) {
    double u1 = uniform_real(rng, 0.0, 1.0);
    while (u1 <= 0.0) u1 = uniform_real(rng, 0.0, 1.0);
    const double u2 = uniform_real(rng, 0.0, 1.0);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Fisher-Yates with the unbiased draw above.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_u64(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

inline Bytes random_bytes(Rng& rng, std::size_t n) {
    Bytes out(n);
    std::size_t i = 0;
    while (i < n) {
        std::uint64_t word = rng();
        for (int k = 0; k < 8 && i < n; ++k, ++i) {
            out[i] = static_cast<std::uint8_t>(word & 0xff);
            word >>= 8;
        }
    }
    return out;
}

}  // namespace fedchain
