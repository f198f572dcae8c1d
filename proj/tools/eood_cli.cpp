// eood: command-line front end for calibration, scoring and evaluation.
//
// Exit codes: 0 success, 2 usage or validation error, 1 runtime or I/O error.
// Results go to stdout (or --out); errors go to stderr as one JSON object.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eood/eood.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

struct CommonFlags {
    std::string manifest;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::size_t jobs = eood::default_jobs();
};

void add_common(CLI::App* cmd, CommonFlags& f, bool manifest_required, bool seed_required) {
    auto* m = cmd->add_option("--manifest", f.manifest, "dataset manifest (JSON)")->check(CLI::ExistingFile);
    if (manifest_required) m->required();
    cmd->add_option("--config", f.config, "pipeline config (JSON)")->check(CLI::ExistingFile);
    auto* s = cmd->add_option("--seed", f.seed, "root random seed");
    if (seed_required) s->required();
    cmd->add_option("--out", f.out, "output path (stdout when omitted)");
    cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
}

eood::PipelineConfig make_config(const CommonFlags& f) {
    eood::PipelineConfig config = f.config.empty() ? eood::PipelineConfig{} : eood::load_config(f.config);
    if (f.seed) config.rng_seed = *f.seed;
    config.validate();
    return config;
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    eood::detail::atomic_write(out, text.data(), text.size());
}

std::string sanitize(const std::string& id) {
    std::string s = id;
    for (char& c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                        c == '-' || c == '_';
        if (!ok) c = '_';
    }
    return s;
}

int run_jigsaw(const CommonFlags& f, std::optional<int> grid_flag) {
    eood::PipelineConfig config = make_config(f);
    if (grid_flag) config.grid = *grid_flag;
    config.validate();
    if (f.out.empty()) throw eood::ValidationError("jigsaw needs --out <directory>");

    const eood::Manifest input = eood::load_manifest(f.manifest);
    std::vector<const eood::SampleRecord*> sources;
    std::vector<eood::Image> images;
    for (const auto& r : input.records) {
        if (r.split != eood::Split::id_calib) continue;
        const eood::BlockRef* ref = r.find_block(0);
        if (!ref) throw eood::IngestError("record '" + r.sample_id + "' has no block-0 image dump");
        sources.push_back(&r);
        images.push_back(eood::read_image(ref->path));
    }

    const auto shuffled = eood::generate_pseudo_set(images, config.grid, eood::seeded_rng(config.rng_seed, "jigsaw"));

    const fs::path out_dir(f.out);
    fs::create_directories(out_dir / "pseudo_ood");
    eood::Manifest output = input;
    output.created_with = input.created_with.empty() ? "eood jigsaw" : input.created_with + "; eood jigsaw";
    output.created_with += " grid=" + std::to_string(config.grid) + " seed=" + std::to_string(config.rng_seed);
    for (std::size_t i = 0; i < sources.size(); ++i) {
        char prefix[32];
        std::snprintf(prefix, sizeof prefix, "%06zu_", i);
        const fs::path dump = fs::absolute(out_dir / "pseudo_ood" / (prefix + sanitize(sources[i]->sample_id) + ".b0.eood"));
        eood::write_dump(shuffled[i], dump);
        eood::SampleRecord rec;
        rec.sample_id = eood::pseudo_ood_id(sources[i]->sample_id);
        rec.split = eood::Split::pseudo_ood;
        rec.block_refs.push_back({0, dump.lexically_normal().string()});
        output.records.push_back(std::move(rec));
    }
    eood::write_manifest(output, out_dir / "manifest.json");
    std::cout << "wrote " << sources.size() << " pseudo-OOD images to " << (out_dir / "manifest.json").string() << "\n";
    return kExitOk;
}

int run_calibrate(const CommonFlags& f) {
    const eood::PipelineConfig config = make_config(f);
    const eood::Manifest manifest = eood::load_manifest(f.manifest);
    const auto profile = eood::calibrate(manifest.records, config, f.jobs);
    emit(eood::to_json(profile).dump(2) + "\n", f.out);
    return kExitOk;
}

int run_score(const CommonFlags& f, const std::string& profile_path, const std::vector<std::string>& splits,
              double temperature) {
    const eood::CalibrationProfile profile = eood::load_profile(profile_path);
    if (f.seed && *f.seed != profile.config.rng_seed)
        throw eood::ValidationError("--seed differs from the seed the profile was calibrated with");
    if (!f.config.empty() && eood::load_config(f.config) != profile.config)
        throw eood::ValidationError("--config differs from the config stored in the profile");
    const eood::Manifest manifest = eood::load_manifest(f.manifest);

    std::vector<eood::SampleRecord> selected;
    for (const auto& r : manifest.records) {
        if (!splits.empty() && std::find(splits.begin(), splits.end(), eood::to_string(r.split)) == splits.end())
            continue;
        selected.push_back(r);
    }
    const auto reports = eood::score_records(selected, profile, f.jobs, temperature);
    const std::string fp = eood::profile_fingerprint(profile);
    std::string text;
    for (const auto& r : reports) text += eood::to_json(r, fp).dump() + "\n";
    emit(text, f.out);
    return kExitOk;
}

std::pair<std::string, std::string> split_named(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) return {fs::path(arg).stem().string(), arg};
    return {arg.substr(0, eq), arg.substr(eq + 1)};
}

int run_eval(const CommonFlags& f, const std::string& id_path, const std::vector<std::string>& ood_args) {
    const eood::PipelineConfig config = make_config(f);
    if (ood_args.empty()) throw eood::ValidationError("eval needs at least one --ood file");
    std::vector<eood::NamedScores> ood;
    for (const auto& arg : ood_args) {
        auto [name, path] = split_named(arg);
        if (!fs::is_regular_file(path)) throw eood::ValidationError("OOD score file not found: " + path);
        ood.push_back({name, {}});
    }
    const auto id_lines = eood::load_scores(id_path);
    for (std::size_t i = 0; i < ood_args.size(); ++i) ood[i].lines = eood::load_scores(split_named(ood_args[i]).second);

    const auto summary = eood::evaluate(id_lines, ood, config.tpr_target);
    std::cout << eood::format_table(summary);
    if (!f.out.empty()) emit(eood::to_json(summary).dump(2) + "\n", f.out);
    return kExitOk;
}

int run_ablate(const CommonFlags& f, const std::vector<std::string>& calib_args) {
    const eood::PipelineConfig config = make_config(f);
    const eood::Manifest test = eood::load_manifest(f.manifest);
    std::vector<eood::CalibrationSet> calib;
    for (const auto& arg : calib_args) {
        eood::CalibrationSet set;
        const auto eq = arg.find('=');
        std::string path = arg;
        set.grid = config.grid;
        if (eq != std::string::npos) {
            try {
                set.grid = std::stoi(arg.substr(0, eq));
            } catch (const std::exception&) {
                throw eood::ValidationError("--calib expects GRID=MANIFEST, got '" + arg + "'");
            }
            path = arg.substr(eq + 1);
        }
        if (set.grid < 1) throw eood::ValidationError("calibration grid must be >= 1");
        if (!fs::is_regular_file(path)) throw eood::ValidationError("calibration manifest not found: " + path);
        set.records = eood::load_manifest(path).records;
        calib.push_back(std::move(set));
    }
    const auto report = eood::ablate_blocks(test.records, calib, config, f.jobs);
    std::cout << eood::format_table(report);
    if (!f.out.empty()) emit(eood::to_json(report).dump(2) + "\n", f.out);
    return kExitOk;
}

int run_selftest(const CommonFlags& f, int seeds, bool inject) {
    eood::SelftestOptions opt;
    opt.seed = f.seed.value_or(0);
    opt.seeds = seeds;
    opt.inject_bad_digamma = inject;
    const auto results = eood::run_selftest(opt);
    bool all = true;
    for (const auto& r : results) {
        std::printf("%s  %-40s value=%.6g expected=%.6g tol=%.3g\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.value, r.expected, r.tolerance);
        all = all && r.passed;
    }
    std::printf("%s\n", all ? "selftest: all checks passed" : "selftest: FAILED");
    return all ? kExitOk : kExitRuntime;
}

void report_error(const std::string& kind, const std::string& message) {
    std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entropy-based out-of-distribution detection"};
    app.require_subcommand(1);

    CommonFlags jig, cal, sco, eva, abl, sel;

    auto* jigsaw = app.add_subcommand("jigsaw", "generate jigsaw pseudo-OOD images for id_calib records");
    add_common(jigsaw, jig, true, true);
    std::optional<int> grid;
    jigsaw->add_option("--grid", grid, "jigsaw grid size g (g x g tiles)");

    auto* calibrate = app.add_subcommand("calibrate", "select the sensitive block and threshold");
    add_common(calibrate, cal, true, true);

    auto* score = app.add_subcommand("score", "score records with a calibration profile (JSON lines)");
    add_common(score, sco, true, false);
    std::string profile_path;
    std::vector<std::string> splits;
    double temperature = 1.0;
    score->add_option("--profile", profile_path, "calibration profile")->required()->check(CLI::ExistingFile);
    score->add_option("--split", splits, "only score records of these splits")
        ->check(CLI::IsMember({"id_calib", "pseudo_ood", "test_id", "test_ood"}));
    score->add_option("--temperature", temperature, "energy-score temperature")->check(CLI::PositiveNumber);

    auto* eval = app.add_subcommand("eval", "FPR95 / AUROC table from score files");
    add_common(eval, eva, false, false);
    std::string id_scores;
    std::vector<std::string> ood_scores;
    eval->add_option("--id", id_scores, "ID score file")->required()->check(CLI::ExistingFile);
    eval->add_option("--ood", ood_scores, "OOD score file, NAME=PATH or PATH")->required();

    auto* ablate = app.add_subcommand("ablate-blocks", "per-block FPR95 / AUROC and CER per jigsaw grid");
    add_common(ablate, abl, true, false);
    std::vector<std::string> calib_sets;
    ablate->add_option("--calib", calib_sets, "calibration manifest, GRID=PATH or PATH");

    auto* selftest = app.add_subcommand("selftest", "estimator checks against closed-form entropies");
    add_common(selftest, sel, false, false);
    int seeds = 5;
    bool inject = false;
    selftest->add_option("--seeds", seeds, "number of seeds averaged per check")->check(CLI::PositiveNumber);
    selftest->add_flag("--inject-bad-digamma", inject, "test hook: use a deliberately wrong digamma");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("usage", e.what());
        return kExitValidation;
    }

    try {
        if (*jigsaw) return run_jigsaw(jig, grid);
        if (*calibrate) return run_calibrate(cal);
        if (*score) return run_score(sco, profile_path, splits, temperature);
        if (*eval) return run_eval(eva, id_scores, ood_scores);
        if (*ablate) return run_ablate(abl, calib_sets);
        if (*selftest) return run_selftest(sel, seeds, inject);
    } catch (const eood::Error& e) {
        report_error(e.kind(), e.what());
        return e.category() == eood::ErrorCategory::validation ? kExitValidation : kExitRuntime;
    } catch (const fs::filesystem_error& e) {
        report_error("io", e.what());
        return kExitRuntime;
    } catch (const std::exception& e) {
        report_error("internal", e.what());
        return kExitRuntime;
    }
    return kExitValidation;
}
