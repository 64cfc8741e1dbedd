#pragma once

#include <cmath>
#include <cstdint>

#include "rap/common.hpp"

namespace rap {

// Counter-based seed splitter: every subsystem derives its own stream from the
// single user-facing seed, so runs are reproducible component by component and
// independent of evaluation order.
enum class RngStream : std::uint64_t {
    anisotropy_directions = 1,
    mlp_init = 2,
    train_sampler = 3,
    synthgen = 4,
    fit_sampler = 5,
    test_scratch = 64,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, RngStream stream) {
    return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ull));
}

// Small deterministic generator (splitmix64 state walk). Not std::* engines:
// identical sequences on every platform and compiler.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    Rng(std::uint64_t master, RngStream stream) : state_(derive_seed(master, stream)) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n) via Lemire's multiply-shift.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) return 0;
        __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
        std::uint64_t lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            std::uint64_t t = (0ull - n) % n;
            while (lo < t) {
                m = static_cast<__uint128_t>(next_u64()) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    double normal() {
        // Box-Muller, cached second value.
        if (has_cache_) {
            has_cache_ = false;
            return cache_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        cache_ = r * std::sin(a);
        has_cache_ = true;
        return r * std::cos(a);
    }

    Vec3d unit_sphere_dir() {
        double z = 1.0 - 2.0 * uniform();
        double phi = 2.0 * 3.14159265358979323846 * uniform();
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        return {r * std::cos(phi), r * std::sin(phi), z};
    }

private:
    std::uint64_t state_;
    bool has_cache_ = false;
    double cache_ = 0.0;
};

}  // namespace rap
