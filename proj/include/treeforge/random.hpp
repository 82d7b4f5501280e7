#pragma once

#include <cstdint>
#include <random>

namespace treeforge {

/// Mixes (seed, index) into a child seed. Used for every seed derivation in the
/// project so a single master seed determines all downstream streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Seeded pseudo-random stream.
///
/// The engine is mt19937_64, whose output sequence is fixed by the C++ standard.
/// The distributions are implemented here rather than taken from <random>,
/// because the standard library distributions are implementation-defined and
/// would make draws differ between toolchains.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    RandomSource child(std::uint64_t index) const { return RandomSource(derive_seed(seed_, index)); }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in the closed range [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    double normal();

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace treeforge
