#pragma once

// Counter-based random streams. Every consumer derives a stream from
// (root seed, label, element index), so results do not depend on evaluation
// order or worker count. Adding a new consumer never perturbs existing draws.

#include <cmath>
#include <cstdint>
#include <string_view>

#include "faraday/physconst.hpp"

namespace faraday::rng {

/// splitmix64 finalizer; bijective on u64.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

/// Stream key for a named substream of the root seed.
constexpr std::uint64_t substream(std::uint64_t root_seed, std::string_view label) {
    return mix64(mix64(root_seed) ^ fnv1a(label));
}

/// A deterministic random sequence for one element (sample, cycle, window...).
class Counter {
public:
    Counter(std::uint64_t stream_key, std::uint64_t element_index)
        : key_(mix64(stream_key ^ mix64(element_index + 0x9E3779B97F4A7C15ULL))) {}

    std::uint64_t next_u64() {
        ctr_ += 0x9E3779B97F4A7C15ULL;
        return mix64(key_ ^ ctr_);
    }

    /// Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal (Box-Muller; second value cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53; // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(phys::two_pi * u2);
        have_spare_ = true;
        return r * std::cos(phys::two_pi * u2);
    }

    /// Poisson count, Knuth product method (fine for the means used here).
    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    /// Uniform direction on the unit sphere (Marsaglia rejection).
    void unit_vector(double& x, double& y, double& z) {
        double a, b, s;
        do {
            a = 2.0 * uniform() - 1.0;
            b = 2.0 * uniform() - 1.0;
            s = a * a + b * b;
        } while (s >= 1.0 || s == 0.0);
        const double t = 2.0 * std::sqrt(1.0 - s);
        x = a * t;
        y = b * t;
        z = 1.0 - 2.0 * s;
    }

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace faraday::rng
