#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "eood/core_types.hpp"
#include "eood/ingest/dump.hpp"
#include "eood/parallel.hpp"
#include "eood/selection.hpp"

namespace eood {

/// Oriented EOOD score: the conditional entropy at the selected block, signed
/// so that larger means more in-distribution.
inline double eood_score(const SampleRecord& record, const CalibrationProfile& profile) {
    const double ce = record_conditional_entropy(record, profile.selected_block, profile.config);
    return orientation_sign(profile.orientation) * ce;
}

inline Decision decide(double score, const CalibrationProfile& profile) noexcept {
    return score >= profile.threshold ? Decision::id : Decision::ood;
}

inline double msp_score(const LogitsVector& logits) {
    const auto v = logits.values();
    if (v.size() < 2) throw DomainError("MSP needs at least two logits");
    const double top = *std::max_element(v.begin(), v.end());
    double denom = 0.0;
    for (float x : v) denom += std::exp(static_cast<double>(x) - top);
    return 1.0 / denom;
}

/// T * log(sum_i exp(logit_i / T)), the negative free energy.
inline double energy_score(const LogitsVector& logits, double temperature = 1.0) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw DomainError("temperature must be positive");
    const auto v = logits.values();
    const double top = *std::max_element(v.begin(), v.end()) / temperature;
    double sum = 0.0;
    for (float x : v) sum += std::exp(static_cast<double>(x) / temperature - top);
    return temperature * (top + std::log(sum));
}

inline ScoreReport score_record(const SampleRecord& record, const CalibrationProfile& profile,
                                double temperature = 1.0) {
    ScoreReport report;
    report.sample_id = record.sample_id;
    report.split = record.split;
    report.eood_score = eood_score(record, profile);
    report.decision = decide(report.eood_score, profile);
    if (record.logits_ref) {
        const LogitsVector logits = read_logits(*record.logits_ref);
        report.msp_score = msp_score(logits);
        report.energy_score = energy_score(logits, temperature);
    }
    return report;
}

/// Reports for every record, ordered by sample_id.
inline std::vector<ScoreReport> score_records(std::span<const SampleRecord> records, const CalibrationProfile& profile,
                                              std::size_t jobs = default_jobs(), double temperature = 1.0) {
    std::vector<const SampleRecord*> ordered;
    for (const auto& r : records) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->sample_id < b->sample_id; });
    std::vector<ScoreReport> reports(ordered.size());
    parallel_for(ordered.size(), jobs,
                 [&](std::size_t i) { reports[i] = score_record(*ordered[i], profile, temperature); });
    return reports;
}

}  // namespace eood
