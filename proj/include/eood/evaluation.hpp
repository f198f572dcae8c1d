#pragma once

// Evaluation summaries (FPR95 / AUROC per method and OOD set) and the
// per-block ablation used to compare blocks against the CER choice.

#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eood/core_types.hpp"
#include "eood/ingest/json_io.hpp"
#include "eood/metrics.hpp"
#include "eood/selection.hpp"
#include "json.hpp"

namespace eood {

struct MetricPair {
    double fpr95 = 0.0;
    double auroc = 0.0;
};

struct EvalSummary {
    std::string profile;
    double tpr_target = 0.95;
    std::vector<std::string> methods;
    std::vector<std::string> datasets;
    // results[method][dataset]
    std::map<std::string, std::map<std::string, MetricPair>> results;

    MetricPair average(const std::string& method) const {
        MetricPair avg;
        const auto& per = results.at(method);
        for (const auto& [_, m] : per) {
            avg.fpr95 += m.fpr95;
            avg.auroc += m.auroc;
        }
        avg.fpr95 /= static_cast<double>(per.size());
        avg.auroc /= static_cast<double>(per.size());
        return avg;
    }
};

struct NamedScores {
    std::string name;
    std::vector<ScoreLine> lines;
};

namespace detail {

inline std::optional<std::vector<double>> method_scores(const std::vector<ScoreLine>& lines, const std::string& method) {
    std::vector<double> out;
    out.reserve(lines.size());
    for (const auto& l : lines) {
        if (method == "EOOD") {
            out.push_back(l.report.eood_score);
        } else if (method == "MSP") {
            if (!l.report.msp_score) return std::nullopt;
            out.push_back(*l.report.msp_score);
        } else {
            if (!l.report.energy_score) return std::nullopt;
            out.push_back(*l.report.energy_score);
        }
    }
    return out;
}

}  // namespace detail

/// Every score file must come from the same profile. Baselines are reported
/// only when every record in every file carries them.
inline EvalSummary evaluate(const std::vector<ScoreLine>& id_lines, std::span<const NamedScores> ood_sets,
                            double tpr_target) {
    if (id_lines.empty()) throw ValidationError("ID score file is empty");
    if (ood_sets.empty()) throw ValidationError("at least one OOD score file is required");
    EvalSummary summary;
    summary.profile = id_lines.front().profile;
    summary.tpr_target = tpr_target;
    auto check_profile = [&](const std::vector<ScoreLine>& lines, const std::string& name) {
        if (lines.empty()) throw ValidationError("score file for '" + name + "' is empty");
        for (const auto& l : lines)
            if (l.profile != summary.profile)
                throw ValidationError("score files were produced under different profiles (" + name + ")");
    };
    check_profile(id_lines, "ID");
    for (const auto& set : ood_sets) check_profile(set.lines, set.name);

    for (const std::string method : {"EOOD", "MSP", "Energy"}) {
        const auto id = detail::method_scores(id_lines, method);
        if (!id) continue;
        std::map<std::string, MetricPair> per;
        bool complete = true;
        for (const auto& set : ood_sets) {
            const auto ood = detail::method_scores(set.lines, method);
            if (!ood) {
                complete = false;
                break;
            }
            const ScoreSets sets{*id, *ood};
            per[set.name] = {fpr_at_tpr(sets, tpr_target), auroc(sets)};
        }
        if (!complete) continue;
        summary.methods.push_back(method);
        summary.results[method] = std::move(per);
    }
    for (const auto& set : ood_sets) summary.datasets.push_back(set.name);
    return summary;
}

inline nlohmann::json to_json(const EvalSummary& s) {
    nlohmann::json results = nlohmann::json::array();
    for (const auto& method : s.methods) {
        for (const auto& ds : s.datasets) {
            const auto& m = s.results.at(method).at(ds);
            results.push_back({{"method", method}, {"dataset", ds}, {"fpr95", m.fpr95}, {"auroc", m.auroc}});
        }
        const auto avg = s.average(method);
        results.push_back({{"method", method}, {"dataset", "Average"}, {"fpr95", avg.fpr95}, {"auroc", avg.auroc}});
    }
    return {{"format", "eood-eval-summary"}, {"version", 1},           {"profile", s.profile},
            {"tpr_target", s.tpr_target},    {"results", results}};
}

namespace detail {

inline std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string pad(const std::string& s, std::size_t width, bool right) {
    if (s.size() >= width) return s;
    const std::string fill(width - s.size(), ' ');
    return right ? fill + s : s + fill;
}

inline std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths;
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (widths.size() <= c) widths.push_back(0);
            widths[c] = std::max(widths[c], row[c].size());
        }
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += "  ";
            out += pad(row[c], widths[c], c > 0);
        }
        out += '\n';
    }
    return out;
}

}  // namespace detail

/// One row per OOD set plus an Average row; metrics as percentages.
inline std::string format_table(const EvalSummary& s) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header = {"OOD set"};
    for (const auto& m : s.methods) {
        header.push_back(m + " FPR95");
        header.push_back(m + " AUROC");
    }
    rows.push_back(header);
    auto row_for = [&](const std::string& label, auto&& metric_of) {
        std::vector<std::string> row = {label};
        for (const auto& m : s.methods) {
            const MetricPair p = metric_of(m);
            row.push_back(detail::fixed2(100.0 * p.fpr95));
            row.push_back(detail::fixed2(100.0 * p.auroc));
        }
        rows.push_back(std::move(row));
    };
    for (const auto& ds : s.datasets) row_for(ds, [&](const std::string& m) { return s.results.at(m).at(ds); });
    row_for("Average", [&](const std::string& m) { return s.average(m); });
    return detail::render_table(rows);
}

// ---- per-block ablation ----

struct CalibrationSet {
    int grid = 3;
    std::vector<SampleRecord> records;
};

struct AblationRow {
    int block_index = 0;
    MetricPair metrics;
    std::map<int, double> cer_by_grid;
};

struct AblationReport {
    std::vector<AblationRow> rows;
    std::map<int, int> selected_by_grid;  // grid -> CER-selected block
};

/// Scores test_id against test_ood records at every block >= 2. With
/// calibration sets, each block's orientation comes from the first set and the
/// CER of every block is reported per grid.
inline AblationReport ablate_blocks(std::span<const SampleRecord> test_records, std::span<const CalibrationSet> calib,
                                    const PipelineConfig& config, std::size_t jobs = default_jobs()) {
    config.validate();
    std::vector<const SampleRecord*> ids, oods;
    int block_count = 0;
    for (const auto& r : test_records) {
        if (r.split == Split::test_id) ids.push_back(&r);
        if (r.split == Split::test_ood) oods.push_back(&r);
        if (r.split == Split::test_id || r.split == Split::test_ood) block_count = std::max(block_count, r.max_block());
    }
    if (ids.empty() || oods.empty()) throw ValidationError("ablation needs test_id and test_ood records");
    if (block_count < 2) throw NoSignalError("ablation needs at least two blocks");

    AblationReport report;
    std::map<int, ScoreOrientation> orientation;
    std::map<int, std::map<int, double>> cer;  // block -> grid -> ratio
    for (std::size_t g = 0; g < calib.size(); ++g) {
        PipelineConfig grid_config = config;
        grid_config.grid = calib[g].grid;
        const auto ce = calibration_entropies(calib[g].records, grid_config, jobs);
        const auto profile = assemble_profile(ce, grid_config);
        report.selected_by_grid[calib[g].grid] = profile.selected_block;
        for (const auto& e : profile.cer_vector) cer[e.block_index][calib[g].grid] = e.ratio;
        if (g != 0) continue;
        for (std::size_t b = 0; b < ce.blocks.size(); ++b)
            orientation[ce.blocks[b]] = orientation_from_pairs(ce.pairs[b], config.score_orientation);
    }

    std::vector<int> blocks;
    for (int l = 2; l <= block_count; ++l) blocks.push_back(l);
    std::vector<const SampleRecord*> all = ids;
    all.insert(all.end(), oods.begin(), oods.end());
    std::vector<std::vector<double>> ce_values(blocks.size(), std::vector<double>(all.size()));
    parallel_for(blocks.size() * all.size(), jobs, [&](std::size_t t) {
        const std::size_t b = t / all.size();
        const std::size_t i = t % all.size();
        ce_values[b][i] = record_conditional_entropy(*all[i], blocks[b], config);
    });

    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto it = orientation.find(blocks[b]);
        const double sign = orientation_sign(it == orientation.end() ? config.score_orientation : it->second);
        ScoreSets sets;
        for (std::size_t i = 0; i < all.size(); ++i)
            (i < ids.size() ? sets.id_scores : sets.ood_scores).push_back(sign * ce_values[b][i]);
        AblationRow row;
        row.block_index = blocks[b];
        row.metrics = {fpr_at_tpr(sets, config.tpr_target), auroc(sets)};
        if (auto c = cer.find(blocks[b]); c != cer.end()) row.cer_by_grid = c->second;
        report.rows.push_back(std::move(row));
    }
    return report;
}

inline std::string format_table(const AblationReport& r) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header = {"Block", "FPR95", "AUROC"};
    for (const auto& [grid, _] : r.selected_by_grid) header.push_back("CER " + std::to_string(grid) + "x" + std::to_string(grid));
    rows.push_back(header);
    for (const auto& row : r.rows) {
        std::vector<std::string> cells = {std::to_string(row.block_index), detail::fixed2(100.0 * row.metrics.fpr95),
                                          detail::fixed2(100.0 * row.metrics.auroc)};
        for (const auto& [grid, selected] : r.selected_by_grid) {
            auto it = row.cer_by_grid.find(grid);
            std::string cell = it == row.cer_by_grid.end() ? "-" : detail::fixed2(it->second);
            if (selected == row.block_index) cell += "*";
            cells.push_back(cell);
        }
        rows.push_back(std::move(cells));
    }
    return detail::render_table(rows);
}

inline nlohmann::json to_json(const AblationReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        nlohmann::json cer = nlohmann::json::object();
        for (const auto& [grid, ratio] : row.cer_by_grid) cer[std::to_string(grid)] = ratio;
        rows.push_back({{"block_index", row.block_index}, {"fpr95", row.metrics.fpr95}, {"auroc", row.metrics.auroc}, {"cer_by_grid", cer}});
    }
    nlohmann::json selected = nlohmann::json::object();
    for (const auto& [grid, block] : r.selected_by_grid) selected[std::to_string(grid)] = block;
    return {{"format", "eood-ablation"}, {"version", 1}, {"rows", rows}, {"selected_by_grid", selected}};
}

}  // namespace eood
