#pragma once

#include <cmath>
#include <cstdint>

namespace rexrank {

// splitmix64 step; also used as the avalanche mix for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Splittable seed derivation: hash-chains the parts so that independent
// streams (per trial, per candidate, ...) never depend on execution order.
inline std::uint64_t derive_seed(std::uint64_t master) {
    std::uint64_t s = master;
    return splitmix64(s);
}

template <typename... Rest>
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t part, Rest... rest) {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64(s) ^ part;
    return derive_seed(h, rest...);
}

// Small deterministic PRNG. std:: distributions are implementation-defined,
// so uniform/gaussian draws are done by hand to keep runs reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi], inclusive. Unbiased via rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return lo + static_cast<std::int64_t>(x % span);
    }

    // Standard normal via Box-Muller; the second value of each pair is cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace rexrank
