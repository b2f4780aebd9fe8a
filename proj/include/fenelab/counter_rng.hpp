#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

// Counter-based random numbers (Philox4x32-10, Salmon et al., SC'11).
// Every draw is a pure function of (seed, particle, step, channel), so
// ensembles are reproducible independently of scheduling and worker count.

namespace fenelab::rng {

namespace detail {

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
}

} // namespace detail

struct Counter {
    std::uint32_t particle = 0;
    std::uint32_t step = 0;
    std::uint32_t channel = 0;
    std::uint32_t lane = 0;
};

inline std::array<std::uint32_t, 4> philox4x32(Counter c, std::uint64_t seed) {
    constexpr std::uint32_t kWeylA = 0x9E3779B9u;
    constexpr std::uint32_t kWeylB = 0xBB67AE85u;
    constexpr std::uint32_t kMulA = 0xD2511F53u;
    constexpr std::uint32_t kMulB = 0xCD9E8D57u;

    std::uint32_t x0 = c.particle, x1 = c.step, x2 = c.channel, x3 = c.lane;
    std::uint32_t k0 = static_cast<std::uint32_t>(seed);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
    for (int round = 0; round < 10; ++round) {
        std::uint32_t lo0, hi0, lo1, hi1;
        detail::mulhilo(kMulA, x0, lo0, hi0);
        detail::mulhilo(kMulB, x2, lo1, hi1);
        const std::uint32_t y0 = hi1 ^ x1 ^ k0;
        const std::uint32_t y1 = lo1;
        const std::uint32_t y2 = hi0 ^ x3 ^ k1;
        const std::uint32_t y3 = lo0;
        x0 = y0; x1 = y1; x2 = y2; x3 = y3;
        k0 += kWeylA;
        k1 += kWeylB;
    }
    return {x0, x1, x2, x3};
}

// Uniform in (0,1]; never returns 0, so log() below is safe.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t u = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(u) + 1.0) * 0x1p-64;
}

struct NormalPair {
    double z0, z1;
};

// Two independent standard normals from one counter (Box-Muller).
inline NormalPair normal_pair(Counter c, std::uint64_t seed) {
    const auto w = philox4x32(c, seed);
    const double u1 = to_unit(w[0], w[1]);
    const double u2 = to_unit(w[2], w[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
}

struct UniformPair {
    double u0, u1;
};

inline UniformPair uniform_pair(Counter c, std::uint64_t seed) {
    const auto w = philox4x32(c, seed);
    return {to_unit(w[0], w[1]), to_unit(w[2], w[3])};
}

} // namespace fenelab::rng
