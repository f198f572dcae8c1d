#include <gtest/gtest.h>

#include <numeric>

#include "eood/metrics.hpp"
#include "eood/rng.hpp"
#include "support/oracles.hpp"

using namespace eood;

namespace {

std::vector<double> range(int lo, int hi) {
    std::vector<double> v(static_cast<std::size_t>(hi - lo + 1));
    std::iota(v.begin(), v.end(), lo);
    return v;
}

// Integer-valued scores in a small range so ties are common.
std::vector<double> tied_scores(RandomStream& rng, std::size_t n, std::uint64_t levels) {
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(rng.below(levels));
    return v;
}

}  // namespace

TEST(Threshold, WorkedExamples) {
    EXPECT_EQ(threshold_for_tpr(range(1, 100), 0.95), 6.0);
    EXPECT_EQ(threshold_for_tpr(range(1, 20), 0.95), 2.0);
    EXPECT_EQ(threshold_for_tpr(std::vector<double>{5.0}, 0.95), 5.0);
    EXPECT_EQ(required_true_positives(100, 0.95), 95u);
    EXPECT_EQ(required_true_positives(10, 0.95), 10u);
}

TEST(Threshold, ErrorPaths) {
    EXPECT_THROW(threshold_for_tpr(std::vector<double>{}, 0.95), DomainError);
    EXPECT_THROW(threshold_for_tpr(range(1, 5), 1.0), DomainError);
    EXPECT_THROW(threshold_for_tpr(range(1, 5), 0.0), DomainError);
    EXPECT_THROW(threshold_for_tpr(std::vector<double>{1.0, std::nan("")}, 0.5), DomainError);
}

TEST(FprAtTpr, WorkedExamples) {
    EXPECT_DOUBLE_EQ(fpr_at_tpr({range(1, 100), range(1, 20)}, 0.95), 0.75);
    EXPECT_EQ(fpr_at_tpr({range(11, 20), range(1, 10)}, 0.95), 0.0);
    EXPECT_EQ(fpr_at_tpr({range(1, 10), range(11, 20)}, 0.95), 1.0);
    EXPECT_NEAR(fpr_at_tpr({range(1, 100), range(1, 100)}, 0.95), 0.95, 1.0 / 100);
    EXPECT_THROW(fpr_at_tpr({range(1, 10), {}}, 0.95), DomainError);
}

TEST(Auroc, WorkedExamples) {
    EXPECT_EQ(auroc({range(11, 20), range(1, 10)}), 1.0);
    EXPECT_EQ(auroc({range(1, 10), range(11, 20)}), 0.0);
    EXPECT_EQ(auroc({{1, 1, 1}, {1, 1}}), 0.5);
    EXPECT_DOUBLE_EQ(auroc({{1, 2, 3}, {2}}), 0.5);
    EXPECT_EQ(auroc({{2, 3}, {0, 1}}), 1.0);
    EXPECT_THROW(auroc({{}, {1.0}}), DomainError);
}

TEST(Metrics, MatchBruteForceOracles) {
    auto rng = seeded_rng(11, "metrics");
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(200), m = 1 + rng.below(200);
        ScoreSets s;
        if (trial % 2 == 0) {
            s.id_scores = tied_scores(rng, n, 12);
            s.ood_scores = tied_scores(rng, m, 12);
        } else {
            for (std::size_t i = 0; i < n; ++i) s.id_scores.push_back(rng.normal() + 0.5);
            for (std::size_t i = 0; i < m; ++i) s.ood_scores.push_back(rng.normal());
        }
        const double tpr = 0.05 + 0.9 * rng.uniform();
        ASSERT_NEAR(auroc(s), oracle::auroc(s.id_scores, s.ood_scores), 1e-12);
        ASSERT_NEAR(fpr_at_tpr(s, tpr), oracle::fpr_at_tpr(s.id_scores, s.ood_scores, tpr), 1e-12);
        ASSERT_NEAR(fpr_at_tpr(s, 0.95), oracle::fpr_at_tpr(s.id_scores, s.ood_scores, 0.95), 1e-12);
    }
}

TEST(Metrics, InvariantUnderMonotoneTransform) {
    auto rng = seeded_rng(12, "monotone");
    for (int trial = 0; trial < 20; ++trial) {
        ScoreSets s{tied_scores(rng, 50, 20), tied_scores(rng, 40, 20)};
        ScoreSets t = s;
        for (auto* v : {&t.id_scores, &t.ood_scores})
            for (auto& x : *v) x = std::exp(0.3 * x) + 2.0;
        EXPECT_DOUBLE_EQ(auroc(s), auroc(t));
        EXPECT_DOUBLE_EQ(fpr_at_tpr(s, 0.95), fpr_at_tpr(t, 0.95));
    }
}

TEST(Metrics, SwappingSetsComplementsAuroc) {
    auto rng = seeded_rng(13, "swap");
    ScoreSets s{tied_scores(rng, 60, 8), tied_scores(rng, 30, 8)};
    EXPECT_NEAR(auroc(s) + auroc({s.ood_scores, s.id_scores}), 1.0, 1e-12);
}
