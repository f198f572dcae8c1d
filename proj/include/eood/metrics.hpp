#pragma once

// Detection metrics over score sets where larger scores mean "more ID".

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "eood/errors.hpp"

namespace eood {

struct ScoreSets {
    std::vector<double> id_scores;
    std::vector<double> ood_scores;
};

namespace detail {

inline void check_scores(std::span<const double> scores, const char* what) {
    if (scores.empty()) throw DomainError(std::string(what) + " score set is empty");
    for (double s : scores)
        if (!std::isfinite(s)) throw DomainError(std::string(what) + " scores contain a non-finite value");
}

}  // namespace detail

/// Number of ID scores that must clear the threshold for a TPR of at least
/// `tpr_target`: ceil(tpr_target * n), guarded against representation error
/// in products like 0.95 * 100.
inline std::size_t required_true_positives(std::size_t n, double tpr_target) {
    const double exact = tpr_target * static_cast<double>(n);
    auto need = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
    return std::clamp<std::size_t>(need, 1, n);
}

/// Largest gamma such that at least ceil(tpr_target * n) ID scores are >= gamma.
inline double threshold_for_tpr(std::span<const double> id_scores, double tpr_target) {
    detail::check_scores(id_scores, "ID");
    if (!(tpr_target > 0.0 && tpr_target < 1.0)) throw DomainError("tpr_target must lie in (0, 1)");
    std::vector<double> sorted(id_scores.begin(), id_scores.end());
    const std::size_t need = required_true_positives(sorted.size(), tpr_target);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(need - 1), sorted.end(),
                     std::greater<>());
    return sorted[need - 1];
}

/// Fraction of OOD scores at or above the threshold that keeps TPR >= tpr_target.
inline double fpr_at_tpr(const ScoreSets& sets, double tpr_target) {
    detail::check_scores(sets.ood_scores, "OOD");
    const double gamma = threshold_for_tpr(sets.id_scores, tpr_target);
    const auto false_pos = std::count_if(sets.ood_scores.begin(), sets.ood_scores.end(),
                                         [gamma](double s) { return s >= gamma; });
    return static_cast<double>(false_pos) / static_cast<double>(sets.ood_scores.size());
}

/// Mann-Whitney AUROC with ties credited one half, via mid-ranks.
inline double auroc(const ScoreSets& sets) {
    detail::check_scores(sets.id_scores, "ID");
    detail::check_scores(sets.ood_scores, "OOD");
    const std::size_t n = sets.id_scores.size();
    const std::size_t m = sets.ood_scores.size();

    struct Entry {
        double score;
        bool is_id;
    };
    std::vector<Entry> all;
    all.reserve(n + m);
    for (double s : sets.id_scores) all.push_back({s, true});
    for (double s : sets.ood_scores) all.push_back({s, false});
    std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

    // Sum of (1-based) mid-ranks of the ID entries, doubled to stay integral.
    std::size_t twice_rank_sum = 0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        std::size_t ids = 0;
        while (j < all.size() && all[j].score == all[i].score) ids += all[j++].is_id;
        twice_rank_sum += ids * (i + 1 + j);  // mid-rank = (i+1 + j) / 2
        i = j;
    }
    const double u = static_cast<double>(twice_rank_sum) / 2.0 - static_cast<double>(n) * static_cast<double>(n + 1) / 2.0;
    return u / (static_cast<double>(n) * static_cast<double>(m));
}

}  // namespace eood
