#pragma once

// Synthetic three-block "network" used by the acceptance suite and the CLI
// integration test. No learned weights: the blocks are fixed maps chosen so
// the information flow reacts to jigsaw shuffling in a known way.
//
//   image  x   : 1 x S x S, smooth (low-frequency cosines) for ID,
//                rough (high-frequency cosines) for test OOD
//   block 1    : 2 channels, pointwise  [x, tanh(2x)]
//   block 2    : 2 channels, pointwise mix of block 1, plus per-pass noise
//   block 3    : 2 channels, 5x5 box filter of block 2, plus per-pass noise
//
// Blocks 1 and 2 are pointwise, so a jigsaw only permutes their spatial
// samples and H(B1 | B2) moves by estimator noise alone. Block 3 mixes
// neighbours; on a smooth image it stays close to block 2, while tile seams
// and rough textures pull it away, raising H(B2 | B3).

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "eood/core_types.hpp"
#include "eood/ingest.hpp"
#include "eood/pseudo_ood.hpp"
#include "eood/rng.hpp"

namespace eood::fixture {

struct Options {
    std::size_t side = 18;
    std::size_t calib = 200;
    std::size_t test_id = 200;
    std::size_t test_ood = 200;
    int grid = 3;
    std::uint64_t seed = 7;
    double block2_noise = 0.05;
    double block3_noise = 0.02;
};

struct Sample {
    std::string sample_id;
    Split split = Split::id_calib;
    Image image;
    std::vector<FeatureMap> blocks;  // blocks 1..3
};

inline Image cosine_image(std::size_t side, double min_period, double max_period, RandomStream rng) {
    std::vector<float> px(side * side, 0.0f);
    const int modes = 4;
    for (int m = 0; m < modes; ++m) {
        const double period = min_period + (max_period - min_period) * rng.uniform();
        const double angle = 2.0 * std::numbers::pi * rng.uniform();
        const double phase = 2.0 * std::numbers::pi * rng.uniform();
        const double amp = 0.5 + 0.5 * rng.uniform();
        const double fu = std::cos(angle) / period;
        const double fv = std::sin(angle) / period;
        for (std::size_t r = 0; r < side; ++r)
            for (std::size_t c = 0; c < side; ++c)
                px[r * side + c] += static_cast<float>(
                    amp * std::cos(2.0 * std::numbers::pi * (fu * r + fv * c) + phase) / std::sqrt(modes));
    }
    for (auto& p : px) p += static_cast<float>(0.02 * rng.normal());
    return Image(1, side, side, std::move(px));
}

/// Runs the three fixed blocks; `rng` supplies the per-pass noise.
inline std::vector<FeatureMap> forward(const Image& x, const Options& opt, RandomStream rng) {
    const std::size_t h = x.height(), w = x.width(), n = h * w;
    std::vector<float> b1(2 * n), b2(2 * n), b3(2 * n);
    for (std::size_t p = 0; p < n; ++p) {
        const float v = x.data()[p];
        b1[p] = v;
        b1[n + p] = std::tanh(2.0f * v);
    }
    for (std::size_t p = 0; p < n; ++p) {
        const double a = b1[p], b = b1[n + p];
        b2[p] = static_cast<float>(std::tanh(a + 0.5 * b) + opt.block2_noise * rng.normal());
        b2[n + p] = static_cast<float>(a - 0.3 * b + opt.block2_noise * rng.normal());
    }
    const long radius = 2;
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t r = 0; r < h; ++r) {
            for (std::size_t col = 0; col < w; ++col) {
                double sum = 0.0;
                int count = 0;
                for (long dr = -radius; dr <= radius; ++dr) {
                    for (long dc = -radius; dc <= radius; ++dc) {
                        const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(col) + dc;
                        if (rr < 0 || cc < 0 || rr >= static_cast<long>(h) || cc >= static_cast<long>(w)) continue;
                        sum += b2[c * n + static_cast<std::size_t>(rr) * w + static_cast<std::size_t>(cc)];
                        ++count;
                    }
                }
                b3[c * n + r * w + col] = static_cast<float>(sum / count + opt.block3_noise * rng.normal());
            }
        }
    }
    std::vector<FeatureMap> out;
    out.emplace_back(1, 2, h, w, std::move(b1));
    out.emplace_back(2, 2, h, w, std::move(b2));
    out.emplace_back(3, 2, h, w, std::move(b3));
    return out;
}

inline std::string indexed_id(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%04zu", prefix, i);
    return buf;
}

inline Image smooth_image(const Options& opt, RandomStream rng) { return cosine_image(opt.side, 9.0, 18.0, rng); }
inline Image rough_image(const Options& opt, RandomStream rng) { return cosine_image(opt.side, 2.0, 3.5, rng); }

/// Calibration pairs (id_calib + pseudo_ood) followed by test_id and test_ood samples.
inline std::vector<Sample> build(const Options& opt) {
    const RandomStream root = seeded_rng(opt.seed, "fixture");
    std::vector<Sample> out;
    for (std::size_t i = 0; i < opt.calib; ++i) {
        const std::string id = indexed_id("calib_", i);
        const RandomStream s = root.fork(id);
        Image x = smooth_image(opt, s.fork("image"));
        Image xhat = jigsaw(x, opt.grid, s.fork("jigsaw"));
        auto bx = forward(x, opt, s.fork("pass.x"));
        auto bxhat = forward(xhat, opt, s.fork("pass.xhat"));
        out.push_back({id, Split::id_calib, std::move(x), std::move(bx)});
        out.push_back({pseudo_ood_id(id), Split::pseudo_ood, std::move(xhat), std::move(bxhat)});
    }
    for (std::size_t i = 0; i < opt.test_id; ++i) {
        const std::string id = indexed_id("test_id_", i);
        const RandomStream s = root.fork(id);
        Image x = smooth_image(opt, s.fork("image"));
        auto b = forward(x, opt, s.fork("pass.x"));
        out.push_back({id, Split::test_id, std::move(x), std::move(b)});
    }
    for (std::size_t i = 0; i < opt.test_ood; ++i) {
        const std::string id = indexed_id("test_ood_", i);
        const RandomStream s = root.fork(id);
        Image x = rough_image(opt, s.fork("image"));
        auto b = forward(x, opt, s.fork("pass.x"));
        out.push_back({id, Split::test_ood, std::move(x), std::move(b)});
    }
    return out;
}

/// Writes dumps under `dir` plus calib.json (id_calib + pseudo_ood) and
/// test.json (test_id + test_ood). Returns the manifest paths.
struct WrittenFixture {
    std::filesystem::path calib_manifest;
    std::filesystem::path test_manifest;
};

inline WrittenFixture write(const std::vector<Sample>& samples, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "dumps");
    const fs::path root = fs::absolute(dir);
    Manifest calib, test;
    calib.dataset_name = "synthetic-calib";
    test.dataset_name = "synthetic-test";
    calib.block_count = test.block_count = 3;
    calib.created_with = test.created_with = "synthetic three-block fixture";
    for (const auto& s : samples) {
        SampleRecord rec;
        rec.sample_id = s.sample_id;
        rec.split = s.split;
        const fs::path image_path = root / "dumps" / (s.sample_id + ".b0.eood");
        write_dump(s.image, image_path);
        rec.block_refs.push_back({0, image_path.string()});
        for (const auto& b : s.blocks) {
            const fs::path p = root / "dumps" / (s.sample_id + ".b" + std::to_string(b.block_index()) + ".eood");
            write_dump(b, p);
            rec.block_refs.push_back({b.block_index(), p.string()});
        }
        const bool is_calib = s.split == Split::id_calib || s.split == Split::pseudo_ood;
        (is_calib ? calib : test).records.push_back(std::move(rec));
    }
    WrittenFixture out{root / "calib.json", root / "test.json"};
    write_manifest(calib, out.calib_manifest);
    write_manifest(test, out.test_manifest);
    return out;
}

}  // namespace eood::fixture
