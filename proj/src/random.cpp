#include "meal/random.hpp"

#include <numeric>

#include "meal/core.hpp"

namespace meal {
namespace {

constexpr uint128 make_u128(std::uint64_t hi, std::uint64_t lo) {
    return (static_cast<uint128>(hi) << 64) | lo;
}

constexpr uint128 kMultiplier =
    make_u128(0x2360ED051FC65DA4ULL, 0x4385DF649FCCF645ULL);

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return mix64(mix64(seed) ^ mix64(tag + 0xD1B54A32D192ED03ULL));
}

Pcg64::Pcg64(std::uint64_t seed, std::uint64_t stream) {
    const std::uint64_t s_hi = mix64(seed);
    const std::uint64_t s_lo = mix64(s_hi ^ seed);
    const std::uint64_t i_hi = mix64(stream ^ 0xA0761D6478BD642FULL);
    const std::uint64_t i_lo = mix64(i_hi ^ stream);
    inc_ = (make_u128(i_hi, i_lo) << 1) | 1u;
    state_ = 0;
    (*this)();
    state_ += make_u128(s_hi, s_lo);
    (*this)();
}

Pcg64::result_type Pcg64::operator()() {
    state_ = state_ * kMultiplier + inc_;
    const auto hi = static_cast<std::uint64_t>(state_ >> 64);
    const auto lo = static_cast<std::uint64_t>(state_);
    const auto rot = static_cast<unsigned>(state_ >> 122);
    const std::uint64_t x = hi ^ lo;
    return (x >> rot) | (x << ((64u - rot) & 63u));
}

std::uint64_t Pcg64::below(std::uint64_t bound) {
    if (bound == 0) throw Error(ErrorCode::invalid_argument, "Pcg64::below(0)");
    // Lemire's multiply-shift with rejection of the biased low region.
    uint128 m = static_cast<uint128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            m = static_cast<uint128>((*this)()) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double Pcg64::uniform01() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count,
                                                    Pcg64& rng) {
    if (count > n) {
        throw Error(ErrorCode::precondition, "cannot sample " + std::to_string(count) +
                                                 " of " + std::to_string(n) + " items");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(perm[i], perm[j]);
    }
    perm.resize(count);
    return perm;
}

}  // namespace meal
