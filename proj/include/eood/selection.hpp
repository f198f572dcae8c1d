#pragma once

// Sensitive-block selection. For each block l >= 2 the conditional entropy
// f_CE(x, l) = H(B(l-1) | B(l)) is estimated for every calibration image and
// its jigsaw counterpart; the Conditional Entropy Ratio
//
//   R(l) = mean_i |f_CE(x_i, l) - f_CE(xhat_i, l)| / max_i |...|
//
// ranks blocks, and the arg-max block is used for scoring.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "eood/core_types.hpp"
#include "eood/entropy.hpp"
#include "eood/features.hpp"
#include "eood/ingest/dump.hpp"
#include "eood/metrics.hpp"
#include "eood/parallel.hpp"
#include "eood/pseudo_ood.hpp"
#include "eood/rng.hpp"

namespace eood {

struct CePair {
    std::size_t sample_index = 0;
    double ce_id = 0.0;
    double ce_pood = 0.0;
};

struct BlockCer {
    double ratio = 0.0;
    bool degenerate = false;
};

inline BlockCer cer_from_differences(std::span<const double> diffs) {
    if (diffs.empty()) throw DomainError("CER needs at least one calibration pair");
    double sum = 0.0;
    double max = 0.0;
    for (double d : diffs) {
        if (!std::isfinite(d) || d < 0.0) throw DomainError("CER differences must be finite and non-negative");
        sum += d;
        max = std::max(max, d);
    }
    if (max == 0.0) return {0.0, true};
    // Clamp guards the last ulp when every difference is equal.
    return {std::min(1.0, sum / static_cast<double>(diffs.size()) / max), false};
}

inline BlockCer block_cer(std::span<const CePair> pairs) {
    std::vector<double> diffs;
    diffs.reserve(pairs.size());
    for (const auto& p : pairs) {
        if (!std::isfinite(p.ce_id) || !std::isfinite(p.ce_pood))
            throw DomainError("conditional entropies must be finite");
        diffs.push_back(std::abs(p.ce_id - p.ce_pood));
    }
    return cer_from_differences(diffs);
}

/// Block with the largest ratio; ties go to the smallest block index.
inline int select_block(std::span<const CerEntry> cer_vector) {
    if (cer_vector.empty()) throw NoSignalError("no candidate blocks to select from");
    const CerEntry* best = nullptr;
    for (const auto& e : cer_vector) {
        if (!best || e.ratio > best->ratio || (e.ratio == best->ratio && e.block_index < best->block_index))
            best = &e;
    }
    if (!(best->ratio > 0.0)) throw NoSignalError("every block is degenerate (zero ID/pseudo-OOD separation)");
    return best->block_index;
}

/// Stream roots shared by calibration and scoring. Jitter depends only on the
/// block, so f_CE is a pure function of the two feature maps: identical dumps
/// give identical values whichever record or command they come from.
struct EntropyStreams {
    RandomStream projection;
    RandomStream jitter;

    explicit EntropyStreams(std::uint64_t seed)
        : projection(seeded_rng(seed, "projection")), jitter(seeded_rng(seed, "jitter")) {}

    RandomStream jitter_for(int block_index) const { return jitter.fork(static_cast<std::uint64_t>(block_index)); }
};

/// f_CE for one sample at block `cur.block_index()`.
inline double block_conditional_entropy(const FeatureMap& prev, const FeatureMap& cur, const PipelineConfig& config) {
    const EntropyStreams streams(config.rng_seed);
    const AlignedPair pair = align_pair(prev, cur, config, streams.projection);
    return conditional_entropy(pair.prev, pair.cur, config.k_neighbors, config.jitter_scale,
                               streams.jitter_for(cur.block_index()));
}

namespace detail {

inline FeatureMap load_block(const SampleRecord& record, int block_index) {
    const BlockRef* ref = record.find_block(block_index);
    if (!ref)
        throw IngestError("record '" + record.sample_id + "' has no dump for block " + std::to_string(block_index));
    return read_feature_map(ref->path, block_index);
}

}  // namespace detail

/// f_CE(x, block) read from the record's dumps.
inline double record_conditional_entropy(const SampleRecord& record, int block_index, const PipelineConfig& config) {
    if (block_index < 2) throw DomainError("conditional entropy needs a predecessor block (block >= 2)");
    const FeatureMap prev = detail::load_block(record, block_index - 1);
    const FeatureMap cur = detail::load_block(record, block_index);
    return block_conditional_entropy(prev, cur, config);
}

/// Sign that ranks ID above pseudo-OOD on average; `fallback` when the means tie.
inline ScoreOrientation orientation_from_pairs(std::span<const CePair> pairs, ScoreOrientation fallback) {
    double mean_id = 0.0;
    double mean_pood = 0.0;
    for (const auto& p : pairs) {
        mean_id += p.ce_id;
        mean_pood += p.ce_pood;
    }
    if (mean_id < mean_pood) return ScoreOrientation::neg_conditional_entropy;
    if (mean_id > mean_pood) return ScoreOrientation::pos_conditional_entropy;
    return fallback;
}

/// Per-block CE pairs for calibration, indexed by block.
struct CalibrationEntropies {
    std::vector<int> blocks;                 // candidate blocks, ascending
    std::vector<std::vector<CePair>> pairs;  // pairs[b][i] for blocks[b]
};

/// Builds the profile from precomputed conditional entropies: CER per block,
/// arg-max selection, orientation, and the TPR threshold on ID scores.
inline CalibrationProfile assemble_profile(const CalibrationEntropies& ce, const PipelineConfig& config) {
    config.validate();
    if (ce.blocks.empty()) throw NoSignalError("no block has a predecessor; at least two blocks are required");
    CalibrationProfile profile;
    profile.config = config;
    profile.calibration_samples = ce.pairs.front().size();
    for (std::size_t b = 0; b < ce.blocks.size(); ++b) {
        const BlockCer cer = block_cer(ce.pairs[b]);
        profile.cer_vector.push_back({ce.blocks[b], cer.ratio});
        if (cer.degenerate) profile.degenerate_blocks.push_back(ce.blocks[b]);
    }
    profile.selected_block = select_block(profile.cer_vector);

    const auto at = std::find(ce.blocks.begin(), ce.blocks.end(), profile.selected_block) - ce.blocks.begin();
    const auto& selected = ce.pairs[static_cast<std::size_t>(at)];
    profile.orientation = orientation_from_pairs(selected, config.score_orientation);

    const double sign = orientation_sign(profile.orientation);
    std::vector<double> id_scores;
    id_scores.reserve(selected.size());
    for (const auto& p : selected) id_scores.push_back(sign * p.ce_id);
    profile.threshold = threshold_for_tpr(id_scores, config.tpr_target);
    return profile;
}

/// Pairs each id_calib record with its pseudo-OOD counterpart
/// (sample_id + ".jigsaw"), sorted by sample_id and capped at
/// config.calibration_size by a seeded subsample.
inline std::vector<std::pair<const SampleRecord*, const SampleRecord*>> calibration_pairs(
    std::span<const SampleRecord> records, const PipelineConfig& config) {
    std::map<std::string, const SampleRecord*, std::less<>> pseudo;
    std::vector<const SampleRecord*> ids;
    for (const auto& r : records) {
        if (r.split == Split::pseudo_ood) pseudo.emplace(r.sample_id, &r);
        if (r.split == Split::id_calib) ids.push_back(&r);
    }
    std::sort(ids.begin(), ids.end(), [](auto* a, auto* b) { return a->sample_id < b->sample_id; });
    if (ids.size() > static_cast<std::size_t>(config.calibration_size)) {
        RandomStream rng = seeded_rng(config.rng_seed, "calibration_subset");
        const auto perm = draw_permutation(ids.size(), rng);
        std::vector<const SampleRecord*> chosen;
        for (std::size_t i = 0; i < static_cast<std::size_t>(config.calibration_size); ++i) chosen.push_back(ids[perm[i]]);
        std::sort(chosen.begin(), chosen.end(), [](auto* a, auto* b) { return a->sample_id < b->sample_id; });
        ids = std::move(chosen);
    }
    std::vector<std::pair<const SampleRecord*, const SampleRecord*>> out;
    for (const SampleRecord* r : ids) {
        auto it = pseudo.find(pseudo_ood_id(r->sample_id));
        if (it == pseudo.end())
            throw IngestError("id_calib record '" + r->sample_id + "' has no pseudo_ood counterpart '" +
                              pseudo_ood_id(r->sample_id) + "'");
        out.emplace_back(r, it->second);
    }
    return out;
}

/// Conditional entropies for every (calibration pair, block >= 2).
inline CalibrationEntropies calibration_entropies(std::span<const SampleRecord> records, const PipelineConfig& config,
                                                  std::size_t jobs = default_jobs()) {
    config.validate();
    const auto pairs = calibration_pairs(records, config);
    if (pairs.size() < 1) throw ValidationError("calibration needs at least one id_calib record");

    int block_count = 0;
    for (const auto& [x, xhat] : pairs) block_count = std::max({block_count, x->max_block(), xhat->max_block()});
    CalibrationEntropies ce;
    for (int l = 2; l <= block_count; ++l) ce.blocks.push_back(l);
    if (ce.blocks.empty()) throw NoSignalError("no block has a predecessor; at least two blocks are required");
    ce.pairs.assign(ce.blocks.size(), std::vector<CePair>(pairs.size()));

    const std::size_t tasks = ce.blocks.size() * pairs.size();
    parallel_for(tasks, jobs, [&](std::size_t t) {
        const std::size_t b = t / pairs.size();
        const std::size_t i = t % pairs.size();
        const int block = ce.blocks[b];
        CePair& out = ce.pairs[b][i];
        out.sample_index = i;
        out.ce_id = record_conditional_entropy(*pairs[i].first, block, config);
        out.ce_pood = record_conditional_entropy(*pairs[i].second, block, config);
    });
    return ce;
}

inline CalibrationProfile calibrate(std::span<const SampleRecord> records, const PipelineConfig& config,
                                    std::size_t jobs = default_jobs()) {
    return assemble_profile(calibration_entropies(records, config, jobs), config);
}

}  // namespace eood
