#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace matic {

// Deterministic RNG with named substreams. All experiment randomness flows
// from one master seed through derive(), so any component (population,
// weight init, shuffling, datasets) can be reproduced in isolation.
// Distributions are hand-rolled so that streams are identical across
// standard libraries, not just across runs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix(seed ^ 0x9e3779b97f4a7c15ULL)) {}

    static std::uint64_t hash_name(std::string_view name) {
        std::uint64_t h = 1469598103934665603ULL; // FNV-1a 64
        for (unsigned char c : name) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return h;
    }

    Rng derive(std::string_view name, std::uint64_t index = 0) const {
        std::uint64_t s = state_;
        s = splitmix(s ^ hash_name(name));
        s = splitmix(s ^ (index + 0x517cc1b727220a95ULL));
        return Rng(s);
    }

    std::uint64_t next_u64() {
        // xorshift64* on top of a splitmix-initialized state
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1DULL;
    }

    // uniform in [0, 1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    bool bit() { return (next_u64() >> 63) != 0; }

    // Box-Muller; draws two uniforms per call, second value discarded so the
    // stream position does not depend on call history.
    double normal(double mu = 0.0, double sigma = 1.0) {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
        return mu + sigma * z;
    }

    std::uint64_t state() const { return state_; }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::uint64_t state_;
};

} // namespace matic
