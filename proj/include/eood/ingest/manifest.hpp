#pragma once

// Dataset manifest (JSON). Example:
//
//   {
//     "format": "eood-manifest",
//     "version": 1,
//     "dataset_name": "cifar10-calib",
//     "block_count": 3,
//     "created_with": "extractor wrn28 plan v1",
//     "records": [
//       {"sample_id": "img_0001", "split": "id_calib",
//        "blocks": [{"block_index": 0, "path": "img_0001/b0.eood"},
//                   {"block_index": 1, "path": "img_0001/b1.eood"}],
//        "logits": "img_0001/logits.eood"}
//     ],
//     "skipped": [{"path": "broken.png", "reason": "unreadable"}]
//   }
//
// Paths are relative to the manifest's directory. Block 0 is the raw input
// image; blocks 1..block_count are network block outputs.

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "eood/core_types.hpp"
#include "eood/errors.hpp"
#include "eood/ingest/dump.hpp"
#include "json.hpp"

namespace eood {

inline constexpr int kManifestVersion = 1;

struct SkippedInput {
    std::string path;
    std::string reason;

    friend bool operator==(const SkippedInput&, const SkippedInput&) = default;
};

struct Manifest {
    std::string dataset_name;
    std::vector<SampleRecord> records;
    int block_count = 0;
    std::string created_with;
    std::vector<SkippedInput> skipped;

    const SampleRecord* find(std::string_view sample_id) const noexcept {
        for (const auto& r : records)
            if (r.sample_id == sample_id) return &r;
        return nullptr;
    }
};

namespace detail {

template <class T>
T manifest_field(const nlohmann::json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) throw ManifestError(where + ": missing field '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ManifestError(where + ": field '" + key + "' has the wrong type");
    }
}

inline std::string resolve_path(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative()) path = base / path;
    return path.lexically_normal().string();
}

inline std::string relative_path(const std::filesystem::path& base, const std::string& p) {
    const auto rel = std::filesystem::path(p).lexically_relative(base);
    return rel.empty() ? p : rel.generic_string();
}

}  // namespace detail

inline void validate_manifest(const Manifest& m) {
    if (m.block_count < 0) throw ManifestError("block_count must be >= 0");
    std::set<std::string> ids;
    for (const auto& r : m.records) {
        if (r.sample_id.empty()) throw ManifestError("record with empty sample_id");
        if (!ids.insert(r.sample_id).second) throw ManifestError("duplicate sample_id '" + r.sample_id + "'");
        int last = -1;
        for (const auto& b : r.block_refs) {
            if (b.block_index < 0 || b.block_index > m.block_count)
                throw ManifestError("record '" + r.sample_id + "' references block " +
                                    std::to_string(b.block_index) + " outside 0.." +
                                    std::to_string(m.block_count));
            if (b.block_index <= last)
                throw ManifestError("record '" + r.sample_id + "' blocks are not strictly increasing");
            if (b.path.empty()) throw ManifestError("record '" + r.sample_id + "' has an empty dump path");
            last = b.block_index;
        }
    }
}

/// Parses a manifest document; relative paths resolve against `base_dir`.
inline Manifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    using detail::manifest_field;
    if (!doc.is_object()) throw ManifestError("manifest must be a JSON object");
    static const std::set<std::string> known = {"format",       "version", "dataset_name", "block_count",
                                                "created_with", "records", "skipped"};
    for (const auto& [key, _] : doc.items())
        if (!known.count(key)) throw ManifestError("unknown manifest field '" + key + "'");
    if (doc.contains("format") && doc.at("format") != "eood-manifest")
        throw ManifestError("manifest format tag is not eood-manifest");
    if (manifest_field<int>(doc, "version", "manifest") != kManifestVersion)
        throw ManifestError("unsupported manifest version");

    Manifest m;
    m.dataset_name = manifest_field<std::string>(doc, "dataset_name", "manifest");
    m.block_count = manifest_field<int>(doc, "block_count", "manifest");
    if (doc.contains("created_with")) m.created_with = manifest_field<std::string>(doc, "created_with", "manifest");

    const auto& records = doc.contains("records") ? doc.at("records") : nlohmann::json();
    if (!records.is_array()) throw ManifestError("manifest: 'records' must be an array");
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        const std::string where = "record " + std::to_string(i);
        SampleRecord r;
        r.sample_id = manifest_field<std::string>(rec, "sample_id", where);
        const auto split = parse_split(manifest_field<std::string>(rec, "split", where));
        if (!split) throw ManifestError(where + ": unknown split");
        r.split = *split;
        const auto& blocks = rec.contains("blocks") ? rec.at("blocks") : nlohmann::json();
        if (!blocks.is_array()) throw ManifestError(where + ": 'blocks' must be an array");
        for (const auto& b : blocks) {
            BlockRef ref;
            ref.block_index = manifest_field<int>(b, "block_index", where);
            ref.path = detail::resolve_path(base_dir, manifest_field<std::string>(b, "path", where));
            r.block_refs.push_back(std::move(ref));
        }
        if (rec.contains("logits") && !rec.at("logits").is_null())
            r.logits_ref = detail::resolve_path(base_dir, manifest_field<std::string>(rec, "logits", where));
        m.records.push_back(std::move(r));
    }
    if (doc.contains("skipped")) {
        const auto& skipped = doc.at("skipped");
        if (!skipped.is_array()) throw ManifestError("manifest: 'skipped' must be an array");
        for (const auto& s : skipped)
            m.skipped.push_back({manifest_field<std::string>(s, "path", "skipped entry"),
                                 manifest_field<std::string>(s, "reason", "skipped entry")});
    }
    validate_manifest(m);
    return m;
}

inline Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ManifestError(path.string() + ": invalid JSON (" + e.what() + ")");
    }
    auto base = std::filesystem::absolute(path).parent_path();
    return parse_manifest(doc, base);
}

inline nlohmann::json manifest_to_json(const Manifest& m, const std::filesystem::path& base_dir) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : m.records) {
        nlohmann::json blocks = nlohmann::json::array();
        for (const auto& b : r.block_refs)
            blocks.push_back({{"block_index", b.block_index}, {"path", detail::relative_path(base_dir, b.path)}});
        nlohmann::json rec = {{"sample_id", r.sample_id}, {"split", std::string(to_string(r.split))}, {"blocks", blocks}};
        if (r.logits_ref) rec["logits"] = detail::relative_path(base_dir, *r.logits_ref);
        records.push_back(std::move(rec));
    }
    nlohmann::json doc = {{"format", "eood-manifest"},     {"version", kManifestVersion},
                          {"dataset_name", m.dataset_name}, {"block_count", m.block_count},
                          {"created_with", m.created_with}, {"records", records}};
    if (!m.skipped.empty()) {
        nlohmann::json skipped = nlohmann::json::array();
        for (const auto& s : m.skipped) skipped.push_back({{"path", s.path}, {"reason", s.reason}});
        doc["skipped"] = skipped;
    }
    return doc;
}

inline void write_manifest(const Manifest& m, const std::filesystem::path& path) {
    validate_manifest(m);
    const auto base = std::filesystem::absolute(path).parent_path();
    const std::string text = manifest_to_json(m, base).dump(2) + "\n";
    detail::atomic_write(path, text.data(), text.size());
}

}  // namespace eood
