#pragma once

#include <cstdint>
#include <random>

namespace evs {

/// Deterministic random source. mt19937_64 output is pinned by the
/// standard, and all derived draws below avoid std::*_distribution (whose
/// output is implementation-defined), so a seed reproduces the same values
/// on any toolchain. Substreams give independent per-task generators that
/// do not depend on consumption order elsewhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Uniform integer on [0, n). Modulo bias is below 2^-32 for the small
    /// ranges used here.
    std::uint64_t uniform_int(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Independent child generator; children with distinct indices are
    /// decorrelated regardless of how much the parent has been consumed.
    [[nodiscard]] Rng substream(std::uint64_t index) const {
        return Rng(splitmix64(seed_ ^ (0x9E3779B97F4A7C15ull * (index + 1))));
    }

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    static std::uint64_t splitmix64(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace evs
