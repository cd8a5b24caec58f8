#pragma once

// Reproducible per-trajectory random streams.
//
// Each (master_seed, stream_index) pair seeds its own std::mt19937_64 through a
// SplitMix64 mix of both words. The engine's output sequence is fixed by the
// standard, and the uniform/normal transforms below are written out by hand,
// so a stream produces the same draws on every conforming platform and for any
// thread count.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace qtraj {

struct SeededStream {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;

    friend bool operator==(const SeededStream&, const SeededStream&) = default;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class StreamEngine {
public:
    explicit StreamEngine(SeededStream stream)
        : engine_(splitmix64(splitmix64(stream.master_seed) ^ splitmix64(~stream.stream_index))) {}

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal by the Box-Muller transform; pairs are cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double radius = std::sqrt(-2.0 * std::log(uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// true with probability 1/2.
    bool coin() { return (engine_() >> 63) != 0; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace qtraj
