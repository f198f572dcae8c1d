#include <gtest/gtest.h>

#include <algorithm>

#include "eood/pseudo_ood.hpp"

using namespace eood;

namespace {

Image ramp(std::size_t c, std::size_t h, std::size_t w) {
    std::vector<float> v(c * h * w);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i);
    return Image(c, h, w, std::move(v));
}

std::vector<float> sorted_channel(const Image& img, std::size_t c) {
    auto ch = img.channel(c);
    std::vector<float> v(ch.begin(), ch.end());
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST(Jigsaw, GridOneIsIdentity) {
    const Image img = ramp(3, 7, 5);
    EXPECT_EQ(jigsaw(img, 1, seeded_rng(1, "jigsaw")), img);
}

TEST(Jigsaw, ForcedPermutationMovesTilesExactly) {
    const Image img = ramp(1, 4, 4);
    const std::vector<std::size_t> perm = {3, 2, 1, 0};  // [TL,TR,BL,BR] -> [BR,BL,TR,TL]
    const Image out = apply_tile_permutation(img, 2, perm);
    // Tile-copy oracle: output tile t at (tr, tc) holds input tile perm[t].
    for (std::size_t t = 0; t < 4; ++t) {
        const std::size_t src = perm[t];
        for (std::size_t r = 0; r < 2; ++r)
            for (std::size_t c = 0; c < 2; ++c)
                EXPECT_EQ(out.at(0, (t / 2) * 2 + r, (t % 2) * 2 + c), img.at(0, (src / 2) * 2 + r, (src % 2) * 2 + c));
    }
    // Top-left of the output is the old bottom-right tile: values 10, 11, 14, 15.
    EXPECT_EQ(out.at(0, 0, 0), 10.0f);
    EXPECT_EQ(out.at(0, 1, 1), 15.0f);
}

TEST(Jigsaw, CropsToGridMultipleAndPreservesMultiset) {
    auto rng = seeded_rng(2, "img");
    std::vector<float> v(3 * 32 * 32);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    const Image img(3, 32, 32, v);
    const Image out = jigsaw(img, 3, seeded_rng(2, "jigsaw"));
    EXPECT_EQ(out.height(), 30u);
    EXPECT_EQ(out.width(), 30u);
    const Image cropped = crop_for_grid(img, 3);
    EXPECT_EQ(cropped.at(0, 0, 0), img.at(0, 1, 1));  // centered: one row/col trimmed each side
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(sorted_channel(out, c), sorted_channel(cropped, c));
    EXPECT_NE(out, cropped);
}

TEST(Jigsaw, InversePermutationRestoresInput) {
    auto rng = seeded_rng(3, "inverse");
    for (int g = 2; g <= 4; ++g) {
        const Image img = crop_for_grid(ramp(3, 13, 17), g);
        auto stream = rng.fork(std::uint64_t(g));
        const auto result = jigsaw_with_permutation(img, g, stream);
        EXPECT_FALSE(std::is_sorted(result.permutation.begin(), result.permutation.end()));
        EXPECT_EQ(apply_tile_permutation(result.image, g, inverse_permutation(result.permutation)), img);
    }
}

TEST(Jigsaw, OutputDiffersWheneverTilesDiffer) {
    // Only two distinct tiles: most non-identity permutations of a 2x2 grid
    // leave this image unchanged, so the shuffle has to keep drawing.
    std::vector<float> v(16, 0.0f);
    v[0] = v[1] = v[4] = v[5] = 1.0f;  // top-left tile differs from the rest
    const Image img(1, 4, 4, v);
    for (std::uint64_t s = 0; s < 50; ++s) EXPECT_NE(jigsaw(img, 2, seeded_rng(s, "two-tiles")), img);
}

TEST(Jigsaw, UniformImageStillTerminates) {
    const Image flat(1, 6, 6, std::vector<float>(36, 0.5f));
    EXPECT_EQ(jigsaw(flat, 3, seeded_rng(1, "flat")), flat);
}

TEST(Jigsaw, ErrorPaths) {
    EXPECT_THROW(jigsaw(ramp(1, 4, 4), 0, seeded_rng(1, "x")), DomainError);
    EXPECT_THROW(jigsaw(ramp(1, 2, 5), 3, seeded_rng(1, "x")), DomainError);
    EXPECT_THROW(apply_tile_permutation(ramp(1, 4, 4), 2, std::vector<std::size_t>{0, 0, 1, 2}), DomainError);
}

TEST(PseudoSet, EmptyInDeterministicIndependent) {
    EXPECT_TRUE(generate_pseudo_set({}, 3, seeded_rng(1, "set")).empty());

    const Image img = ramp(1, 9, 9);
    const std::vector<Image> inputs(2, img);
    const auto a = generate_pseudo_set(inputs, 3, seeded_rng(1, "set"));
    const auto b = generate_pseudo_set(inputs, 3, seeded_rng(1, "set"));
    ASSERT_EQ(a.size(), 2u);
    EXPECT_EQ(a, b);
    EXPECT_NE(a[0], a[1]);  // independent permutations per sample
}
