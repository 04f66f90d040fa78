// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <cmath>
#include <cstdint>

namespace na {

/// SplitMix64 (Vigna, 2015). All randomness in this project flows through
/// this generator so that scene generation and golden files reproduce
/// bit-for-bit across platforms, independent of the standard library's
/// engine choices. State is a single 64-bit word advanced by the golden
/// gamma; outputs pass through the murmur-style finalizer.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 random mantissa bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [0, n). Modulo reduction; the bias is below
    /// 2^-32 for every n used here and keeps the draw sequence simple to
    /// document.
    std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi <= lo) return lo;
        return lo + static_cast<std::int64_t>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    /// Standard normal via Box-Muller. Consumes exactly two draws per
    /// call; no cached second variate, so the consumption schedule is a
    /// pure function of call count.
    double normal() {
        double u1 = next_double();
        double u2 = next_double();
        // Guard log(0); pushes u1 to the smallest representable draw.
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    /// Child generator for a named stream. Decorrelates substreams of a
    /// base seed (scene index, parameter init, shuffling) without
    /// advancing this generator.
    static std::uint64_t derive_stream(std::uint64_t base_seed, std::uint64_t stream_id) {
        SplitMix64 g(base_seed ^ (0xBF58476D1CE4E5B9ULL * (stream_id + 1)));
        return g.next_u64();
    }

private:
    std::uint64_t state_;
};

}  // namespace na
