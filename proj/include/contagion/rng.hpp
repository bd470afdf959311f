#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace contagion {

__extension__ using uint128 = unsigned __int128;

/// Identifier recorded in run manifests for the seed derivation scheme.
inline constexpr const char* kSeedScheme = "splitmix64-derive+xoshiro256starstar/v1";

/// SplitMix64 output function (Steele, Lea & Flood). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
    state += 0x9e3779b97f4a7c15ULL;
    return mix64(state);
}

/// Derives the seed of an independent stream keyed by `keys` under `master`.
/// Replica r of a run seeded with s uses derive_seed(s, {r}).
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = mix64(master ^ 0x6a09e667f3bcc909ULL);
    for (std::uint64_t key : keys) {
        h = mix64(h + 0x9e3779b97f4a7c15ULL + mix64(key));
    }
    return h;
}

/// Stream key for a real-valued parameter (exact bit pattern).
inline std::uint64_t key_of(double value) noexcept {
    return std::bit_cast<std::uint64_t>(value);
}

/// xoshiro256** 1.0 (Blackman & Vigna), state expanded from a 64-bit seed with SplitMix64.
/// All derived variates are computed here rather than through <random> distributions
/// so that streams are bit-identical across standard library implementations.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) noexcept {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64_next(sm);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = std::rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = std::rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open_low() noexcept {
        return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n), n > 0 (Lemire's nearly divisionless method).
    std::uint64_t below(std::uint64_t n) noexcept {
        uint128 m = static_cast<uint128>((*this)()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<uint128>((*this)()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Exp(rate) variate by inversion.
    double exponential(double rate) noexcept { return -std::log(uniform_open_low()) / rate; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

private:
    std::array<std::uint64_t, 4> state_{};
};

}  // namespace contagion
