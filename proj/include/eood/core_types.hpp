#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eood/errors.hpp"

namespace eood {

namespace detail {

inline std::size_t checked_volume(std::span<const std::size_t> dims) {
    std::size_t volume = 1;
    for (std::size_t d : dims) {
        if (d == 0) throw DomainError("tensor dimension must be >= 1");
        volume *= d;
    }
    return volume;
}

inline void require_finite(std::span<const float> values, std::string_view what) {
    for (float v : values) {
        if (!std::isfinite(v)) throw DomainError(std::string(what) + " contains a non-finite value");
    }
}

}  // namespace detail

/// Dense channel-major (channel, row, column) float tensor of rank 3.
class Tensor3 {
  public:
    Tensor3() = default;

    Tensor3(std::size_t channels, std::size_t height, std::size_t width, std::vector<float> data)
        : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
        const std::size_t dims[] = {channels, height, width};
        if (data_.size() != detail::checked_volume(dims))
            throw DomainError("tensor data length does not match channels*height*width");
        detail::require_finite(data_, "tensor");
    }

    std::size_t channels() const noexcept { return channels_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t plane() const noexcept { return height_ * width_; }

    float at(std::size_t c, std::size_t r, std::size_t col) const noexcept {
        return data_[(c * height_ + r) * width_ + col];
    }
    std::span<const float> data() const noexcept { return data_; }
    std::span<const float> channel(std::size_t c) const noexcept {
        return std::span<const float>(data_).subspan(c * plane(), plane());
    }

    friend bool operator==(const Tensor3&, const Tensor3&) = default;

  private:
    std::size_t channels_ = 0;
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<float> data_;
};

/// Activation tensor emitted by one network block for one sample.
class FeatureMap : public Tensor3 {
  public:
    FeatureMap() = default;
    FeatureMap(int block_index, std::size_t channels, std::size_t height, std::size_t width,
               std::vector<float> data)
        : Tensor3(channels, height, width, std::move(data)), block_index_(block_index) {
        if (block_index < 1) throw DomainError("feature map block index must be >= 1");
    }
    FeatureMap(int block_index, Tensor3 tensor) : Tensor3(std::move(tensor)), block_index_(block_index) {
        if (block_index < 1) throw DomainError("feature map block index must be >= 1");
    }

    int block_index() const noexcept { return block_index_; }

    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

  private:
    int block_index_ = 1;
};

/// Network input image (block 0 by convention in manifests).
class Image : public Tensor3 {
  public:
    Image() = default;
    Image(std::size_t channels, std::size_t height, std::size_t width, std::vector<float> pixels)
        : Tensor3(channels, height, width, std::move(pixels)) {
        validate_channels();
    }
    explicit Image(Tensor3 tensor) : Tensor3(std::move(tensor)) { validate_channels(); }

    friend bool operator==(const Image&, const Image&) = default;

  private:
    void validate_channels() const {
        if (channels() != 1 && channels() != 3) throw DomainError("image must have 1 or 3 channels");
    }
};

class LogitsVector {
  public:
    LogitsVector() = default;
    explicit LogitsVector(std::vector<float> values) : values_(std::move(values)) {
        if (values_.empty()) throw DomainError("logits vector is empty");
        detail::require_finite(values_, "logits");
    }

    std::span<const float> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

    friend bool operator==(const LogitsVector&, const LogitsVector&) = default;

  private:
    std::vector<float> values_;
};

enum class Split { id_calib, pseudo_ood, test_id, test_ood };

inline std::string_view to_string(Split s) noexcept {
    switch (s) {
        case Split::id_calib: return "id_calib";
        case Split::pseudo_ood: return "pseudo_ood";
        case Split::test_id: return "test_id";
        case Split::test_ood: return "test_ood";
    }
    return "id_calib";
}

inline std::optional<Split> parse_split(std::string_view s) noexcept {
    if (s == "id_calib") return Split::id_calib;
    if (s == "pseudo_ood") return Split::pseudo_ood;
    if (s == "test_id") return Split::test_id;
    if (s == "test_ood") return Split::test_ood;
    return std::nullopt;
}

struct BlockRef {
    int block_index = 0;
    std::string path;

    friend bool operator==(const BlockRef&, const BlockRef&) = default;
};

/// One sample's identity and the dumps that describe it.
/// Paths are absolute once the record comes out of load_manifest.
struct SampleRecord {
    std::string sample_id;
    Split split = Split::id_calib;
    std::vector<BlockRef> block_refs;  // strictly increasing block_index
    std::optional<std::string> logits_ref;

    const BlockRef* find_block(int block_index) const noexcept {
        auto it = std::find_if(block_refs.begin(), block_refs.end(),
                               [&](const BlockRef& b) { return b.block_index == block_index; });
        return it == block_refs.end() ? nullptr : &*it;
    }

    int max_block() const noexcept { return block_refs.empty() ? 0 : block_refs.back().block_index; }

    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

// Pseudo-OOD counterparts of an id_calib record carry this suffix on the id.
inline constexpr std::string_view kJigsawSuffix = ".jigsaw";

inline std::string pseudo_ood_id(std::string_view sample_id) {
    return std::string(sample_id) + std::string(kJigsawSuffix);
}

enum class PoolPolicy { coarser_grid };

// neg: score = -f_CE (low conditional entropy reads as in-distribution).
enum class ScoreOrientation { neg_conditional_entropy, pos_conditional_entropy };

inline std::string_view to_string(ScoreOrientation o) noexcept {
    return o == ScoreOrientation::neg_conditional_entropy ? "neg_conditional_entropy"
                                                          : "pos_conditional_entropy";
}

inline double orientation_sign(ScoreOrientation o) noexcept {
    return o == ScoreOrientation::neg_conditional_entropy ? -1.0 : 1.0;
}

struct PipelineConfig {
    int k_neighbors = 3;
    double jitter_scale = 1e-10;
    int channel_cap = 32;
    PoolPolicy pool_policy = PoolPolicy::coarser_grid;
    int grid = 3;
    double tpr_target = 0.95;
    std::uint64_t rng_seed = 0;
    ScoreOrientation score_orientation = ScoreOrientation::neg_conditional_entropy;
    // Upper bound on the number of ID calibration samples used for block selection.
    int calibration_size = 1000;

    void validate() const {
        if (k_neighbors < 1) throw ValidationError("k_neighbors must be >= 1");
        if (!(jitter_scale > 0.0) || !std::isfinite(jitter_scale))
            throw ValidationError("jitter_scale must be a positive finite number");
        if (channel_cap < 1) throw ValidationError("channel_cap must be >= 1");
        if (grid < 1) throw ValidationError("grid must be >= 1");
        if (!(tpr_target > 0.0 && tpr_target < 1.0))
            throw ValidationError("tpr_target must lie strictly between 0 and 1");
        if (calibration_size < 1) throw ValidationError("calibration_size must be >= 1");
    }

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

struct CerEntry {
    int block_index = 0;
    double ratio = 0.0;

    friend bool operator==(const CerEntry&, const CerEntry&) = default;
};

struct CalibrationProfile {
    int selected_block = 0;
    double threshold = 0.0;
    ScoreOrientation orientation = ScoreOrientation::neg_conditional_entropy;
    std::vector<CerEntry> cer_vector;
    std::vector<int> degenerate_blocks;
    PipelineConfig config;
    std::size_t calibration_samples = 0;

    friend bool operator==(const CalibrationProfile&, const CalibrationProfile&) = default;
};

enum class Decision { id, ood };

inline std::string_view to_string(Decision d) noexcept { return d == Decision::id ? "ID" : "OOD"; }

struct ScoreReport {
    std::string sample_id;
    Split split = Split::test_id;
    double eood_score = 0.0;
    Decision decision = Decision::id;
    std::optional<double> msp_score;
    std::optional<double> energy_score;

    friend bool operator==(const ScoreReport&, const ScoreReport&) = default;
};

}  // namespace eood
