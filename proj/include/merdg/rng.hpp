#pragma once

#include <cstdint>

#include "merdg/matrix.hpp"

namespace merdg {

/// Deterministic stream expansion: maps (seed, stream id) to an independent
/// sub-seed. Every derived randomness in the project flows through this.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// xoshiro256** seeded through splitmix64. Same seed, same stream of draws.
/// Normal deviates use Box-Muller on two uniforms per draw (no caching), so
/// draw counts are easy to reason about when replaying a run.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1).
    double next_real();

    /// Standard normal deviate; consumes exactly two uniforms.
    double next_normal();

    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t next_below(std::uint64_t n);

    /// Independent generator for a named sub-stream of this rng's seed.
    SeededRng derive(std::uint64_t stream) const;

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t state_[4];
};

/// Matrix of i.i.d. standard normal entries, a pure function of (seed state, dims).
Matrix gaussian_matrix(SeededRng& rng, std::size_t rows, std::size_t cols);

/// Fisher-Yates shuffle driven by the given rng.
template <typename T>
void shuffle(std::vector<T>& items, SeededRng& rng) {
    if (items.size() < 2) return;
    for (std::size_t i = items.size() - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
        std::swap(items[i], items[j]);
    }
}

}  // namespace merdg
