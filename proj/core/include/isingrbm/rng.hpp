#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace isingrbm {

// Splittable PRNG stream (xoshiro256** seeded through splitmix64).
//
// Every random draw in the library goes through an Rng passed by the caller.
// The uniform and normal transforms are implemented here rather than with
// <random> distributions so that streams are bit-reproducible across
// standard library implementations.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) noexcept;

    // Independent child stream keyed by (seed, keys...). Does not advance
    // the parent stream.
    static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept;

    // Child stream keyed by `key`; advances this stream by one draw.
    Rng split(std::uint64_t key) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return next(); }
    result_type next() noexcept;

    // Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept;
    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n) noexcept;
    // Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() noexcept;
    double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

    // Seed this stream was constructed from (after derivation).
    std::uint64_t seed() const noexcept { return seed_; }

    bool operator==(const Rng&) const = default;

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
};

// Deterministic Fisher-Yates permutation of 0..n-1.
template <typename Index>
void shuffle_indices(Index* first, std::size_t n, Rng& rng) noexcept {
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_index(i));
        const Index tmp = first[i - 1];
        first[i - 1] = first[j];
        first[j] = tmp;
    }
}

}  // namespace isingrbm
