#pragma once

// Feature maps -> point sets. Spatial positions are samples, channels are
// coordinates; wide blocks are reduced with a seeded sign projection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "eood/core_types.hpp"
#include "eood/entropy.hpp"
#include "eood/rng.hpp"

namespace eood {

struct AlignedPair {
    SampleMatrix prev;
    SampleMatrix cur;
    int block_index = 0;  // block of `cur`
    std::size_t grid_h = 0;
    std::size_t grid_w = 0;
};

namespace detail {

// Cell i of an even partition of [0, source) into `target` parts starts at
// ceil(i * source / target).
constexpr std::size_t cell_start(std::size_t i, std::size_t source, std::size_t target) noexcept {
    return (i * source + target - 1) / target;
}

}  // namespace detail

inline FeatureMap pool_to_grid(const FeatureMap& map, std::size_t target_h, std::size_t target_w) {
    if (target_h < 1 || target_w < 1) throw DomainError("pooling target must be at least 1x1");
    if (target_h > map.height() || target_w > map.width())
        throw DomainError("pooling target exceeds the source grid");
    if (target_h == map.height() && target_w == map.width()) return map;

    std::vector<float> out;
    out.reserve(map.channels() * target_h * target_w);
    for (std::size_t c = 0; c < map.channels(); ++c) {
        for (std::size_t i = 0; i < target_h; ++i) {
            const std::size_t r0 = detail::cell_start(i, map.height(), target_h);
            const std::size_t r1 = detail::cell_start(i + 1, map.height(), target_h);
            for (std::size_t j = 0; j < target_w; ++j) {
                const std::size_t c0 = detail::cell_start(j, map.width(), target_w);
                const std::size_t c1 = detail::cell_start(j + 1, map.width(), target_w);
                double sum = 0.0;
                for (std::size_t r = r0; r < r1; ++r)
                    for (std::size_t col = c0; col < c1; ++col) sum += map.at(c, r, col);
                out.push_back(static_cast<float>(sum / static_cast<double>((r1 - r0) * (c1 - c0))));
            }
        }
    }
    return FeatureMap(map.block_index(), map.channels(), target_h, target_w, std::move(out));
}

/// channel_cap x channels matrix of +-1/sqrt(channel_cap), row-major. Depends
/// only on (projection_root, block_index, channels, channel_cap).
inline std::vector<double> sign_projection(const RandomStream& projection_root, int block_index,
                                           std::size_t channels, std::size_t channel_cap) {
    RandomStream rng = projection_root.fork(static_cast<std::uint64_t>(block_index));
    const double magnitude = 1.0 / std::sqrt(static_cast<double>(channel_cap));
    std::vector<double> matrix(channel_cap * channels);
    for (double& m : matrix) m = (rng.next_u64() >> 63) ? magnitude : -magnitude;
    return matrix;
}

inline SampleMatrix to_sample_matrix(const FeatureMap& map, int channel_cap, const RandomStream& projection_root) {
    if (channel_cap < 1) throw DomainError("channel cap must be >= 1");
    const std::size_t n = map.plane();
    const std::size_t channels = map.channels();
    const auto data = map.data();

    if (channels <= static_cast<std::size_t>(channel_cap)) {
        std::vector<double> values(n * channels);
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t p = 0; p < n; ++p) values[p * channels + c] = data[c * n + p];
        return SampleMatrix(n, channels, std::move(values));
    }

    const auto cap = static_cast<std::size_t>(channel_cap);
    const auto proj = sign_projection(projection_root, map.block_index(), channels, cap);
    std::vector<double> values(n * cap, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t out = 0; out < cap; ++out) {
            double acc = 0.0;
            for (std::size_t c = 0; c < channels; ++c) acc += proj[out * channels + c] * data[c * n + p];
            values[p * cap + out] = acc;
        }
    }
    return SampleMatrix(n, cap, std::move(values));
}

/// Pools both maps to the coarser common grid and converts them; row i of
/// both matrices refers to the same spatial cell.
inline AlignedPair align_pair(const FeatureMap& prev_map, const FeatureMap& cur_map, const PipelineConfig& config,
                              const RandomStream& projection_root) {
    const std::size_t h = std::min(prev_map.height(), cur_map.height());
    const std::size_t w = std::min(prev_map.width(), cur_map.width());
    AlignedPair pair;
    pair.prev = to_sample_matrix(pool_to_grid(prev_map, h, w), config.channel_cap, projection_root);
    pair.cur = to_sample_matrix(pool_to_grid(cur_map, h, w), config.channel_cap, projection_root);
    pair.block_index = cur_map.block_index();
    pair.grid_h = h;
    pair.grid_w = w;
    return pair;
}

}  // namespace eood
