#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace boardgraph {

// Base class for all library errors. Subclasses exist so callers can
// distinguish bad input data from bad configuration or numeric blowups.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
    using Error::Error;
};
struct EmptyGraphError : Error {
    using Error::Error;
};
struct DegenerateBatchError : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct LabelError : Error {
    using Error::Error;
};
struct MissingTemplateError : Error {
    using Error::Error;
};
struct InfeasibleSplitError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};

// Deterministic random source. Wraps a SplitMix64-seeded xoshiro-style
// 64-bit generator with explicit uniform/normal transforms, so the byte
// stream of every sampling operation depends only on the seed and call
// sequence, not on the standard library in use.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        // SplitMix64 seeding to spread low-entropy seeds over the state.
        std::uint64_t z = seed;
        for (auto& s : state_) {
            z += 0x9e3779b97f4a7c15ULL;
            std::uint64_t x = z;
            x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
            x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
            s = x ^ (x >> 31);
        }
    }

    std::uint64_t next_u64() {
        // xoshiro256**
        auto rotl = [](std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
        std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0. Modulo bias is negligible
    // for the index ranges used here (n far below 2^32).
    std::size_t uniform_index(std::size_t n) { return std::size_t(next_u64() % n); }

    // Standard normal via Box-Muller. Consumes two uniforms per call.
    double normal();

    // Fork a child generator; used to give each board/epoch its own stream.
    Rng fork() { return Rng(next_u64()); }

  private:
    std::uint64_t state_[4];
};

}  // namespace boardgraph
