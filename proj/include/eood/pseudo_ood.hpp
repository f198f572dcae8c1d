#pragma once

// Jigsaw pseudo-OOD images: center-crop to a multiple of the grid, cut into
// g x g tiles, and shuffle the tiles with a non-identity permutation.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "eood/core_types.hpp"
#include "eood/rng.hpp"

namespace eood {

/// Largest centered crop whose height and width are multiples of `grid`.
inline Image crop_for_grid(const Image& image, int grid) {
    if (grid < 1) throw DomainError("jigsaw grid must be >= 1");
    const auto g = static_cast<std::size_t>(grid);
    if (g > 1 && (image.height() < g || image.width() < g))
        throw DomainError("image is smaller than the jigsaw grid");
    const std::size_t h = image.height() / g * g;
    const std::size_t w = image.width() / g * g;
    if (h == image.height() && w == image.width()) return image;
    const std::size_t top = (image.height() - h) / 2;
    const std::size_t left = (image.width() - w) / 2;
    std::vector<float> pixels;
    pixels.reserve(image.channels() * h * w);
    for (std::size_t c = 0; c < image.channels(); ++c)
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t col = 0; col < w; ++col) pixels.push_back(image.at(c, top + r, left + col));
    return Image(image.channels(), h, w, std::move(pixels));
}

/// Output tile t (row-major over the g x g grid) is input tile permutation[t].
/// The image must already be cropped to a multiple of the grid.
inline Image apply_tile_permutation(const Image& cropped, int grid, std::span<const std::size_t> permutation) {
    const auto g = static_cast<std::size_t>(grid);
    if (grid < 1 || cropped.height() % g != 0 || cropped.width() % g != 0)
        throw DomainError("image is not divisible by the jigsaw grid");
    if (permutation.size() != g * g) throw DomainError("tile permutation has the wrong length");
    {
        std::vector<bool> seen(g * g, false);
        for (std::size_t p : permutation) {
            if (p >= g * g || seen[p]) throw DomainError("tile permutation is not a permutation");
            seen[p] = true;
        }
    }
    const std::size_t th = cropped.height() / g;
    const std::size_t tw = cropped.width() / g;
    std::vector<float> out(cropped.data().size());
    for (std::size_t c = 0; c < cropped.channels(); ++c) {
        for (std::size_t t = 0; t < g * g; ++t) {
            const std::size_t src = permutation[t];
            const std::size_t dst_r0 = (t / g) * th, dst_c0 = (t % g) * tw;
            const std::size_t src_r0 = (src / g) * th, src_c0 = (src % g) * tw;
            for (std::size_t r = 0; r < th; ++r)
                for (std::size_t col = 0; col < tw; ++col)
                    out[(c * cropped.height() + dst_r0 + r) * cropped.width() + dst_c0 + col] =
                        cropped.at(c, src_r0 + r, src_c0 + col);
        }
    }
    return Image(cropped.channels(), cropped.height(), cropped.width(), std::move(out));
}

inline std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> permutation) {
    std::vector<std::size_t> inv(permutation.size());
    for (std::size_t i = 0; i < permutation.size(); ++i) inv[permutation[i]] = i;
    return inv;
}

/// Uniform permutation of n items (Fisher-Yates).
inline std::vector<std::size_t> draw_permutation(std::size_t n, RandomStream& rng) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    return perm;
}

namespace detail {

inline bool has_two_distinct_tiles(const Image& cropped, std::size_t g) {
    if (g < 2) return false;
    std::vector<std::size_t> identity(g * g);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    for (std::size_t t = 1; t < g * g; ++t) {
        std::vector<std::size_t> swap01 = identity;
        std::swap(swap01[0], swap01[t]);
        if (apply_tile_permutation(cropped, static_cast<int>(g), swap01) != cropped) return true;
    }
    return false;
}

}  // namespace detail

/// Shuffled copy of `image`, plus the permutation that produced it.
struct JigsawResult {
    Image image;
    std::vector<std::size_t> permutation;
};

inline JigsawResult jigsaw_with_permutation(const Image& image, int grid, RandomStream& rng) {
    const Image cropped = crop_for_grid(image, grid);
    const auto g = static_cast<std::size_t>(grid);
    if (g == 1) return {cropped, {0}};

    const bool distinct = detail::has_two_distinct_tiles(cropped, g);
    for (;;) {
        auto perm = draw_permutation(g * g, rng);
        if (std::is_sorted(perm.begin(), perm.end())) continue;
        Image shuffled = apply_tile_permutation(cropped, grid, perm);
        // With two or more distinct tiles the output must visibly change.
        if (distinct && shuffled == cropped) continue;
        return {std::move(shuffled), std::move(perm)};
    }
}

inline Image jigsaw(const Image& image, int grid, RandomStream rng) {
    return jigsaw_with_permutation(image, grid, rng).image;
}

/// One jigsaw per input; sample i shuffles with its own stream rng.fork(i).
inline std::vector<Image> generate_pseudo_set(std::span<const Image> samples, int grid, const RandomStream& rng) {
    if (grid < 1) throw DomainError("jigsaw grid must be >= 1");
    std::vector<Image> out;
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) out.push_back(jigsaw(samples[i], grid, rng.fork(i)));
    return out;
}

}  // namespace eood
