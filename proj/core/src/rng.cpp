#include "signcraft/rng.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "signcraft/errors.hpp"

namespace signcraft {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

Rng Rng::stream(std::uint64_t seed, std::uint64_t stream_id) noexcept {
    return Rng(mix64(seed + kGolden) ^ mix64(stream_id * kGolden + 1));
}

std::uint64_t Rng::next_u64() noexcept {
    state_ += kGolden;
    return mix64(state_);
}

double Rng::uniform(double lo, double hi) {
    if (!(lo < hi)) throw InvalidArgument("uniform: lo must be < hi");
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    const double v = lo + (hi - lo) * u;
    // lo + (hi-lo)*u can round up to hi for wide ranges
    return v < hi ? v : std::nextafter(hi, lo);
}

double Rng::normal(double mean, double stddev) {
    if (!(stddev > 0.0)) throw InvalidArgument("normal: stddev must be > 0");
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
    return mean + stddev * radius * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw InvalidArgument("below: bound must be positive");
    return next_u64() % bound;
}

std::vector<std::size_t> shuffle_indices(Rng& rng, std::size_t n) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i-- > 1;) {
        const auto j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

}  // namespace signcraft
