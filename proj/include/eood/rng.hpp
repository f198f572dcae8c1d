#pragma once

// Labeled, counter-based random streams.
//
// A stream is a 64-bit key plus a draw counter; draw n is splitmix64 of
// key + n * golden. Streams are cheap to copy, and a copy replays the exact
// same draws, which is how the entropy estimators share jitter between the
// joint and marginal estimates. Nothing here depends on <random>
// distributions, so draws are identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace eood {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace detail

class RandomStream {
  public:
    constexpr explicit RandomStream(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t position() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return detail::mix64(key_ + counter_ * detail::kGolden);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound), rejection sampling (no modulo bias).
    std::uint64_t below(std::uint64_t bound) noexcept {
        if (bound <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return r % bound;
    }

    // Standard normal via Box-Muller; one draw pair per call, second discarded
    // so the stream position stays a simple function of the call count.
    double normal() noexcept {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Independent child stream; depends only on this stream's key and the label.
    RandomStream fork(std::string_view label) const noexcept {
        return RandomStream(detail::mix64(key_ ^ detail::mix64(detail::fnv1a64(label))));
    }

    RandomStream fork(std::uint64_t index) const noexcept {
        return RandomStream(detail::mix64(key_ + detail::mix64(index + detail::kGolden)));
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

inline RandomStream seeded_rng(std::uint64_t seed, std::string_view stream_label) noexcept {
    return RandomStream(detail::mix64(detail::mix64(seed) ^ detail::fnv1a64(stream_label)));
}

}  // namespace eood
