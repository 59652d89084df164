#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace hwg {

// Counter-based deterministic RNG (splitmix64 core). Streams are derived from
// (master seed, stream label, step), so per-fiber sampling is reproducible
// under any parallel schedule.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    static std::uint64_t hash_label(std::string_view label) {
        // FNV-1a, stable across platforms
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : label) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return h;
    }

    static Rng derive(std::uint64_t seed, std::string_view label, std::uint64_t step) {
        std::uint64_t s = mix(seed);
        s = mix(s ^ hash_label(label));
        s = mix(s ^ step);
        Rng r(0);
        r.state_ = s;
        return r;
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    // Uniform in [0, 1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    double uniform(double a, double b) { return a + next_double() * (b - a); }

    // Uniform integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) { return n ? next_u64() % n : 0; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

} // namespace hwg
