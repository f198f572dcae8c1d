#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "eood/eood.hpp"
#include "support/oracles.hpp"
#include "support/synthetic_fixture.hpp"

using namespace eood;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
  protected:
    static void SetUpTestSuite() {
        dir_ = fs::temp_directory_path() / "eood_cli_test";
        fs::remove_all(dir_);
        fixture::Options opt;
        opt.calib = 40;
        opt.test_id = opt.test_ood = 40;
        written_ = new fixture::WrittenFixture(fixture::write(fixture::build(opt), dir_ / "fixture"));
    }
    static void TearDownTestSuite() {
        delete written_;
        written_ = nullptr;
    }

    static RunResult run(const std::string& args) {
        const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
        const std::string cmd = std::string(EOOD_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text(out), read_text(err)};
    }

    static std::string path(const fs::path& p) { return p.string(); }

    static inline fs::path dir_;
    static inline fixture::WrittenFixture* written_ = nullptr;
};

}  // namespace

TEST_F(CliTest, JigsawWritesOnePseudoDumpPerRecordDeterministically) {
    // Image-only manifest: the id_calib records with just their block-0 dump.
    Manifest images = load_manifest(written_->calib_manifest);
    std::erase_if(images.records, [](const SampleRecord& r) { return r.split != Split::id_calib; });
    for (auto& r : images.records) r.block_refs.resize(1);
    images.block_count = 0;
    write_manifest(images, dir_ / "images.json");

    const auto a = run("jigsaw --manifest " + path(dir_ / "images.json") + " --seed 4 --grid 3 --out " + path(dir_ / "jig_a"));
    ASSERT_EQ(a.exit_code, 0) << a.err;
    const auto b = run("jigsaw --manifest " + path(dir_ / "images.json") + " --seed 4 --grid 3 --out " + path(dir_ / "jig_b"));
    ASSERT_EQ(b.exit_code, 0) << b.err;

    const auto m = load_manifest(dir_ / "jig_a" / "manifest.json");
    std::size_t pseudo = 0;
    for (const auto& r : m.records) {
        if (r.split != Split::pseudo_ood) continue;
        ++pseudo;
        const SampleRecord* src = m.find(r.sample_id.substr(0, r.sample_id.size() - kJigsawSuffix.size()));
        ASSERT_NE(src, nullptr);
        const Image x = read_image(src->block_refs[0].path), xhat = read_image(r.block_refs[0].path);
        EXPECT_EQ(xhat.height(), 18u);
        EXPECT_NE(x, xhat);
        const auto rel = fs::path(r.block_refs[0].path).lexically_relative(dir_ / "jig_a");
        EXPECT_EQ(read_text(r.block_refs[0].path), read_text(dir_ / "jig_b" / rel));
    }
    EXPECT_EQ(pseudo, 40u);

    const auto ident = run("jigsaw --manifest " + path(dir_ / "images.json") + " --seed 4 --grid 1 --out " + path(dir_ / "jig_g1"));
    ASSERT_EQ(ident.exit_code, 0) << ident.err;
    const auto g1 = load_manifest(dir_ / "jig_g1" / "manifest.json");
    for (const auto& r : g1.records) {
        if (r.split != Split::pseudo_ood) continue;
        const SampleRecord* src = g1.find(r.sample_id.substr(0, r.sample_id.size() - kJigsawSuffix.size()));
        EXPECT_EQ(read_image(r.block_refs[0].path), read_image(src->block_refs[0].path));
    }
}

TEST_F(CliTest, CalibrateScoreEvalPipeline) {
    const std::string calib = "calibrate --manifest " + path(written_->calib_manifest) + " --seed 11 --jobs 2 --out ";
    const auto c1 = run(calib + path(dir_ / "profile.json"));
    ASSERT_EQ(c1.exit_code, 0) << c1.err;
    ASSERT_EQ(run(calib + path(dir_ / "profile2.json")).exit_code, 0);
    EXPECT_EQ(read_text(dir_ / "profile.json"), read_text(dir_ / "profile2.json"));
    const auto profile = load_profile(dir_ / "profile.json");
    EXPECT_EQ(profile.selected_block, 3);
    EXPECT_EQ(profile.config.rng_seed, 11u);

    const std::string score = "score --manifest " + path(written_->test_manifest) + " --profile " + path(dir_ / "profile.json");
    ASSERT_EQ(run(score + " --split test_id --out " + path(dir_ / "id.jsonl")).exit_code, 0);
    ASSERT_EQ(run(score + " --split test_ood --out " + path(dir_ / "ood.jsonl")).exit_code, 0);
    ASSERT_EQ(run(score + " --split test_id --jobs 1 --out " + path(dir_ / "id2.jsonl")).exit_code, 0);
    EXPECT_EQ(read_text(dir_ / "id.jsonl"), read_text(dir_ / "id2.jsonl"));

    // Scores to stdout match the file output.
    const auto stdout_run = run(score + " --split test_id");
    EXPECT_EQ(stdout_run.out, read_text(dir_ / "id.jsonl"));

    const auto id = load_scores(dir_ / "id.jsonl");
    const auto ood = load_scores(dir_ / "ood.jsonl");
    ASSERT_EQ(id.size(), 40u);
    ASSERT_EQ(ood.size(), 40u);
    EXPECT_TRUE(std::is_sorted(id.begin(), id.end(), [](auto& a, auto& b) { return a.report.sample_id < b.report.sample_id; }));

    const auto ev = run("eval --id " + path(dir_ / "id.jsonl") + " --ood rough=" + path(dir_ / "ood.jsonl") +
                        " --ood again=" + path(dir_ / "ood.jsonl") + " --out " + path(dir_ / "eval.json"));
    ASSERT_EQ(ev.exit_code, 0) << ev.err;
    EXPECT_NE(ev.out.find("Average"), std::string::npos);
    EXPECT_NE(ev.out.find("rough"), std::string::npos);
    EXPECT_TRUE(ev.err.empty());

    std::vector<double> id_s, ood_s;
    for (const auto& l : id) id_s.push_back(l.report.eood_score);
    for (const auto& l : ood) ood_s.push_back(l.report.eood_score);
    const auto summary = nlohmann::json::parse(read_text(dir_ / "eval.json"));
    const auto& first = summary["results"][0];
    EXPECT_EQ(first["dataset"], "rough");
    EXPECT_NEAR(first["auroc"].get<double>(), oracle::auroc(id_s, ood_s), 1e-12);
    EXPECT_NEAR(first["fpr95"].get<double>(), oracle::fpr_at_tpr(id_s, ood_s, 0.95), 1e-12);
    EXPECT_EQ(summary["results"][2]["dataset"], "Average");

    // Scoring with a different seed than the profile is refused.
    EXPECT_EQ(run(score + " --seed 12").exit_code, 2);
}

TEST_F(CliTest, AblateBlocksReportsEveryBlock) {
    const auto r = run("ablate-blocks --manifest " + path(written_->test_manifest) + " --calib 3=" +
                       path(written_->calib_manifest) + " --seed 2 --out " + path(dir_ / "ablate.json"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("CER 3x3"), std::string::npos);
    const auto j = nlohmann::json::parse(read_text(dir_ / "ablate.json"));
    EXPECT_EQ(j["rows"].size(), 2u);
    EXPECT_EQ(j["selected_by_grid"]["3"], 3);
}

TEST_F(CliTest, ValidationErrorsExitTwo) {
    const auto expect_exit = [](const RunResult& r, int code) {
        EXPECT_EQ(r.exit_code, code) << r.err;
        EXPECT_TRUE(r.out.empty()) << r.out;
        EXPECT_TRUE(nlohmann::json::accept(r.err)) << r.err;
    };
    const std::string calib = path(written_->calib_manifest);
    expect_exit(run("jigsaw --manifest " + calib + " --seed 1 --grid 0 --out " + path(dir_ / "g0")), 2);
    expect_exit(run("calibrate --manifest " + calib), 2);
    expect_exit(run("calibrate --manifest " + calib + " --seed 1 --bogus"), 2);
    expect_exit(run("calibrate --manifest " + path(dir_ / "nope.json") + " --seed 1"), 2);
    expect_exit(run("frobnicate"), 2);

    // One block only: nothing to select.
    Manifest one = load_manifest(written_->calib_manifest);
    for (auto& r : one.records) r.block_refs.resize(2);  // blocks 0 and 1
    one.block_count = 1;
    write_manifest(one, dir_ / "one_block.json");
    expect_exit(run("calibrate --manifest " + path(dir_ / "one_block.json") + " --seed 1"), 2);

    Manifest empty;
    empty.dataset_name = "empty";
    write_manifest(empty, dir_ / "empty.json");
    expect_exit(run("ablate-blocks --manifest " + path(dir_ / "empty.json")), 2);

    std::ofstream(dir_ / "some.jsonl") << "";
    expect_exit(run("eval --id " + path(dir_ / "some.jsonl") + " --ood x=" + path(dir_ / "absent.jsonl")), 2);
}

TEST_F(CliTest, RuntimeErrorsExitOne) {
    Manifest broken = load_manifest(written_->calib_manifest);
    broken.records[0].block_refs[2].path = path(dir_ / "missing.eood");
    write_manifest(broken, dir_ / "broken.json");
    const auto r = run("calibrate --manifest " + path(dir_ / "broken.json") + " --seed 1");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "io");
}

TEST_F(CliTest, Selftest) {
    const auto ok = run("selftest --seeds 2");
    EXPECT_EQ(ok.exit_code, 0) << ok.out;
    EXPECT_NE(ok.out.find("all checks passed"), std::string::npos);
    const auto bad = run("selftest --seeds 1 --inject-bad-digamma");
    EXPECT_EQ(bad.exit_code, 1);
    EXPECT_NE(bad.out.find("FAIL"), std::string::npos);
}
