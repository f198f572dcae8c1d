#pragma once

// JSON forms of the pipeline config, calibration profile, and score reports.
// Reals are written in shortest round-trip form, so a parse of a written
// document reproduces every double exactly.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "eood/core_types.hpp"
#include "eood/errors.hpp"
#include "eood/ingest/dump.hpp"
#include "eood/rng.hpp"
#include "json.hpp"

namespace eood {

inline constexpr int kProfileVersion = 1;
inline constexpr int kScoreVersion = 1;

namespace detail {

template <class T>
T json_field(const nlohmann::json& obj, const char* key, const char* where) {
    if (!obj.contains(key)) throw ValidationError(std::string(where) + ": missing field '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(std::string(where) + ": field '" + key + "' has the wrong type");
    }
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline ScoreOrientation parse_orientation(const std::string& s) {
    if (s == "neg_conditional_entropy") return ScoreOrientation::neg_conditional_entropy;
    if (s == "pos_conditional_entropy") return ScoreOrientation::pos_conditional_entropy;
    throw ValidationError("unknown score orientation '" + s + "'");
}

}  // namespace detail

inline nlohmann::json to_json(const PipelineConfig& c) {
    return {{"k_neighbors", c.k_neighbors},
            {"jitter_scale", c.jitter_scale},
            {"channel_cap", c.channel_cap},
            {"pool_policy", "coarser_grid"},
            {"grid", c.grid},
            {"tpr_target", c.tpr_target},
            {"rng_seed", c.rng_seed},
            {"score_orientation", std::string(to_string(c.score_orientation))},
            {"calibration_size", c.calibration_size}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline PipelineConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    static const std::set<std::string> known = {"k_neighbors", "jitter_scale",      "channel_cap",
                                                "pool_policy", "grid",              "tpr_target",
                                                "rng_seed",    "score_orientation", "calibration_size"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ValidationError("unknown config field '" + key + "'");
    PipelineConfig c;
    const char* where = "config";
    if (j.contains("k_neighbors")) c.k_neighbors = detail::json_field<int>(j, "k_neighbors", where);
    if (j.contains("jitter_scale")) c.jitter_scale = detail::json_field<double>(j, "jitter_scale", where);
    if (j.contains("channel_cap")) c.channel_cap = detail::json_field<int>(j, "channel_cap", where);
    if (j.contains("pool_policy") && detail::json_field<std::string>(j, "pool_policy", where) != "coarser_grid")
        throw ValidationError("unknown pool_policy");
    if (j.contains("grid")) c.grid = detail::json_field<int>(j, "grid", where);
    if (j.contains("tpr_target")) c.tpr_target = detail::json_field<double>(j, "tpr_target", where);
    if (j.contains("rng_seed")) {
        if (!j.at("rng_seed").is_number_unsigned() && !(j.at("rng_seed").is_number_integer() && j.at("rng_seed") >= 0))
            throw ValidationError("config: rng_seed must be a non-negative integer");
        c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    }
    if (j.contains("score_orientation"))
        c.score_orientation = detail::parse_orientation(detail::json_field<std::string>(j, "score_orientation", where));
    if (j.contains("calibration_size")) c.calibration_size = detail::json_field<int>(j, "calibration_size", where);
    c.validate();
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    try {
        return config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(path.string() + ": invalid JSON (" + e.what() + ")");
    }
}

inline std::string config_fingerprint(const PipelineConfig& c) {
    return detail::hex64(detail::fnv1a64(to_json(c).dump()));
}

namespace detail {

inline nlohmann::json profile_body(const CalibrationProfile& p) {
    nlohmann::json cer = nlohmann::json::array();
    for (const auto& e : p.cer_vector) cer.push_back({{"block_index", e.block_index}, {"cer", e.ratio}});
    return {{"format", "eood-calibration-profile"},
            {"version", kProfileVersion},
            {"selected_block", p.selected_block},
            {"threshold", p.threshold},
            {"orientation", std::string(to_string(p.orientation))},
            {"cer_vector", cer},
            {"degenerate_blocks", p.degenerate_blocks},
            {"calibration_samples", p.calibration_samples},
            {"config", to_json(p.config)},
            {"config_fingerprint", config_fingerprint(p.config)}};
}

}  // namespace detail

/// Identifies a profile; score files carry it so eval can refuse mixtures.
inline std::string profile_fingerprint(const CalibrationProfile& p) {
    return detail::hex64(detail::fnv1a64(detail::profile_body(p).dump()));
}

inline nlohmann::json to_json(const CalibrationProfile& p) {
    auto doc = detail::profile_body(p);
    doc["fingerprint"] = profile_fingerprint(p);
    return doc;
}

inline CalibrationProfile profile_from_json(const nlohmann::json& j) {
    const char* where = "profile";
    if (!j.is_object()) throw ValidationError("profile must be a JSON object");
    if (detail::json_field<int>(j, "version", where) != kProfileVersion)
        throw ValidationError("unsupported profile version");
    CalibrationProfile p;
    p.selected_block = detail::json_field<int>(j, "selected_block", where);
    p.threshold = detail::json_field<double>(j, "threshold", where);
    p.orientation = detail::parse_orientation(detail::json_field<std::string>(j, "orientation", where));
    for (const auto& e : detail::json_field<nlohmann::json>(j, "cer_vector", where))
        p.cer_vector.push_back({detail::json_field<int>(e, "block_index", where),
                                detail::json_field<double>(e, "cer", where)});
    p.degenerate_blocks = detail::json_field<std::vector<int>>(j, "degenerate_blocks", where);
    p.calibration_samples = detail::json_field<std::size_t>(j, "calibration_samples", where);
    p.config = config_from_json(detail::json_field<nlohmann::json>(j, "config", where));

    bool found = false;
    for (const auto& e : p.cer_vector) {
        if (!(e.ratio >= 0.0 && e.ratio <= 1.0)) throw ValidationError("profile CER outside [0, 1]");
        if (e.block_index == p.selected_block) found = true;
    }
    if (!found) throw ValidationError("profile selected_block is missing from cer_vector");
    if (j.contains("fingerprint") && j.at("fingerprint") != profile_fingerprint(p))
        throw ValidationError("profile fingerprint does not match its contents");
    return p;
}

inline void write_profile(const CalibrationProfile& p, const std::filesystem::path& path) {
    const std::string text = to_json(p).dump(2) + "\n";
    detail::atomic_write(path, text.data(), text.size());
}

inline CalibrationProfile load_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open profile " + path.string());
    try {
        return profile_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(path.string() + ": invalid JSON (" + e.what() + ")");
    }
}

/// One JSON-lines record.
inline nlohmann::json to_json(const ScoreReport& r, const std::string& profile_fp) {
    nlohmann::json j = {{"version", kScoreVersion},
                        {"profile", profile_fp},
                        {"sample_id", r.sample_id},
                        {"split", std::string(to_string(r.split))},
                        {"eood_score", r.eood_score},
                        {"decision", std::string(to_string(r.decision))}};
    if (r.msp_score) j["msp_score"] = *r.msp_score;
    if (r.energy_score) j["energy_score"] = *r.energy_score;
    return j;
}

struct ScoreLine {
    ScoreReport report;
    std::string profile;
};

inline ScoreLine score_from_json(const nlohmann::json& j) {
    const char* where = "score record";
    if (!j.is_object()) throw ValidationError("score record must be a JSON object");
    if (detail::json_field<int>(j, "version", where) != kScoreVersion)
        throw ValidationError("unsupported score record version");
    ScoreLine line;
    line.profile = detail::json_field<std::string>(j, "profile", where);
    auto& r = line.report;
    r.sample_id = detail::json_field<std::string>(j, "sample_id", where);
    const auto split = parse_split(detail::json_field<std::string>(j, "split", where));
    if (!split) throw ValidationError("score record has an unknown split");
    r.split = *split;
    r.eood_score = detail::json_field<double>(j, "eood_score", where);
    const auto decision = detail::json_field<std::string>(j, "decision", where);
    if (decision != "ID" && decision != "OOD") throw ValidationError("score record has an unknown decision");
    r.decision = decision == "ID" ? Decision::id : Decision::ood;
    if (j.contains("msp_score")) r.msp_score = detail::json_field<double>(j, "msp_score", where);
    if (j.contains("energy_score")) r.energy_score = detail::json_field<double>(j, "energy_score", where);
    return line;
}

inline std::vector<ScoreLine> load_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open score file " + path.string());
    std::vector<ScoreLine> lines;
    std::string text;
    std::size_t number = 0;
    while (std::getline(in, text)) {
        ++number;
        if (text.empty()) continue;
        try {
            lines.push_back(score_from_json(nlohmann::json::parse(text)));
        } catch (const nlohmann::json::parse_error&) {
            throw ValidationError(path.string() + ":" + std::to_string(number) + ": invalid JSON");
        }
    }
    return lines;
}

}  // namespace eood
