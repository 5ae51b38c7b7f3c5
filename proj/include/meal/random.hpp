#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace meal {

__extension__ using uint128 = unsigned __int128;

/// SplitMix64 finalizer; used to derive independent seeds.
std::uint64_t mix64(std::uint64_t x);

/// Combines a base seed with a stream tag into a new 64-bit seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

/// PCG64 (128-bit LCG state, XSL-RR output). Output is fully specified by
/// (seed, stream), independent of the standard library implementation.
class Pcg64 {
public:
    using result_type = std::uint64_t;

    explicit Pcg64(std::uint64_t seed, std::uint64_t stream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform integer in [0, bound); bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01();

private:
    uint128 state_;
    uint128 inc_;
};

/// First `count` elements of a uniformly random permutation of [0, n),
/// drawn by partial Fisher-Yates.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count,
                                                    Pcg64& rng);

}  // namespace meal
