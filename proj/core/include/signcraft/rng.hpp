#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace signcraft {

/// splitmix64 generator. Every random draw in the library goes through this,
/// so a seed fully determines a run on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

    /// Independent generator for a named sub-stream of a seed.
    static Rng stream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

    std::uint64_t next_u64() noexcept;

    /// Value in [lo, hi) built from the top 53 bits of one draw.
    double uniform(double lo = 0.0, double hi = 1.0);

    /// Box-Muller over two uniform draws (no cached second value).
    double normal(double mean = 0.0, double stddev = 1.0);

    /// Integer in [0, bound) by modulo reduction; bound must be positive.
    std::uint64_t below(std::uint64_t bound);

    std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_;
};

/// Fisher-Yates permutation of 0..n-1, swapping from the back.
std::vector<std::size_t> shuffle_indices(Rng& rng, std::size_t n);

}  // namespace signcraft
