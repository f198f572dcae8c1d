#pragma once

// Kozachenko-Leonenko k-nearest-neighbour differential entropy, in nats.
//
//   H = psi(N) - psi(k) + d*log(2) + (d/N) * sum_i log(eps_i)
//
// eps_i is the max-norm distance from point i to its k-th nearest neighbour;
// d*log(2) is the log-volume of the unit max-norm ball. Duplicate points are
// separated by a tiny zero-mean uniform jitter drawn from a caller-supplied
// stream. Streams are taken by value, so passing the same stream to two calls
// jitters the same matrix identically in both.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "eood/errors.hpp"
#include "eood/rng.hpp"

namespace eood {

/// Row-major n_samples x dim point set.
class SampleMatrix {
  public:
    SampleMatrix() = default;
    SampleMatrix(std::size_t n_samples, std::size_t dim, std::vector<double> values)
        : n_(n_samples), dim_(dim), values_(std::move(values)) {
        if (dim_ == 0) throw DomainError("sample matrix needs at least one dimension");
        if (values_.size() != n_ * dim_) throw DomainError("sample matrix size mismatch");
        for (double v : values_) {
            if (!std::isfinite(v)) throw DomainError("sample matrix contains a non-finite value");
        }
    }

    std::size_t n_samples() const noexcept { return n_; }
    std::size_t dim() const noexcept { return dim_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> row(std::size_t i) const noexcept {
        return std::span<const double>(values_).subspan(i * dim_, dim_);
    }
    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * dim_ + j]; }

    friend bool operator==(const SampleMatrix&, const SampleMatrix&) = default;

  private:
    std::size_t n_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> values_;
};

/// Digamma for x > 0: upward recurrence to x >= 6, then the asymptotic series.
inline double digamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("digamma requires a finite x > 0");
    double shift = 0.0;
    while (x < 6.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Bernoulli terms B_2k / (2k) through k = 7.
    const double series =
        inv2 * (1.0 / 12 -
                inv2 * (1.0 / 120 -
                        inv2 * (1.0 / 252 -
                                inv2 * (1.0 / 240 -
                                        inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12))))));
    return shift + std::log(x) - 0.5 * inv - series;
}

struct StandardDigamma {
    double operator()(double x) const { return digamma(x); }
};

namespace detail {

// k-th nearest max-norm distance for every point. Exact: points are swept in
// order of their first coordinate, and a direction stops once the gap in that
// coordinate alone reaches the current k-th best distance.
inline std::vector<double> kth_neighbor_distances(const SampleMatrix& points, std::size_t k) {
    const std::size_t n = points.n_samples();
    const std::size_t d = points.dim();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return points(a, 0) < points(b, 0); });

    auto chebyshev = [&](std::size_t a, std::size_t b) {
        double best = 0.0;
        const auto ra = points.row(a);
        const auto rb = points.row(b);
        for (std::size_t j = 0; j < d; ++j) best = std::max(best, std::abs(ra[j] - rb[j]));
        return best;
    };

    std::vector<double> result(n);
    std::vector<double> best(k);  // ascending k smallest distances so far
    for (std::size_t pos = 0; pos < n; ++pos) {
        const std::size_t i = order[pos];
        std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
        const double xi = points(i, 0);
        auto offer = [&](std::size_t j) {
            double dist = chebyshev(i, j);
            if (dist >= best.back()) return;
            std::size_t slot = k - 1;
            while (slot > 0 && best[slot - 1] > dist) {
                best[slot] = best[slot - 1];
                --slot;
            }
            best[slot] = dist;
        };
        std::size_t lo = pos;
        std::size_t hi = pos + 1;
        bool left_open = lo > 0;
        bool right_open = hi < n;
        while (left_open || right_open) {
            if (left_open) {
                const std::size_t j = order[lo - 1];
                if (xi - points(j, 0) >= best.back()) {
                    left_open = false;
                } else {
                    offer(j);
                    left_open = --lo > 0;
                }
            }
            if (right_open) {
                const std::size_t j = order[hi];
                if (points(j, 0) - xi >= best.back()) {
                    right_open = false;
                } else {
                    offer(j);
                    right_open = ++hi < n;
                }
            }
        }
        result[i] = best.back();
    }
    return result;
}

inline void check_estimable(const SampleMatrix& points, int k) {
    if (k < 1) throw DomainError("k must be >= 1");
    if (points.n_samples() <= static_cast<std::size_t>(k))
        throw InsufficientSamplesError("kNN entropy needs more than k samples (n=" +
                                       std::to_string(points.n_samples()) +
                                       ", k=" + std::to_string(k) + ")");
}

}  // namespace detail

/// Estimator on the points as given (no jitter). Neighbour distances below
/// `distance_floor` are clamped to it so exact duplicates stay finite.
template <class Digamma = StandardDigamma>
double knn_entropy_exact(const SampleMatrix& points, int k,
                         double distance_floor = std::numeric_limits<double>::min(),
                         Digamma psi = {}) {
    detail::check_estimable(points, k);
    const auto eps = detail::kth_neighbor_distances(points, static_cast<std::size_t>(k));
    double log_sum = 0.0;
    for (double e : eps) log_sum += std::log(std::max(e, distance_floor));
    const double n = static_cast<double>(points.n_samples());
    const double d = static_cast<double>(points.dim());
    return psi(n) - psi(static_cast<double>(k)) + d * std::log(2.0) + d * log_sum / n;
}

/// Adds uniform jitter on [-scale/2, scale/2) to every coordinate, row-major draw order.
inline SampleMatrix jittered(const SampleMatrix& points, double scale, RandomStream rng) {
    if (!(scale > 0.0)) throw DomainError("jitter scale must be positive");
    std::vector<double> values(points.values().begin(), points.values().end());
    for (double& v : values) v += scale * (rng.uniform() - 0.5);
    return SampleMatrix(points.n_samples(), points.dim(), std::move(values));
}

inline SampleMatrix concat_columns(const SampleMatrix& a, const SampleMatrix& b) {
    if (a.n_samples() != b.n_samples())
        throw AlignmentError("cannot concatenate sample matrices with " + std::to_string(a.n_samples()) +
                             " and " + std::to_string(b.n_samples()) + " rows");
    const std::size_t dim = a.dim() + b.dim();
    std::vector<double> values;
    values.reserve(a.n_samples() * dim);
    for (std::size_t i = 0; i < a.n_samples(); ++i) {
        const auto ra = a.row(i);
        const auto rb = b.row(i);
        values.insert(values.end(), ra.begin(), ra.end());
        values.insert(values.end(), rb.begin(), rb.end());
    }
    return SampleMatrix(a.n_samples(), dim, std::move(values));
}

namespace detail {

inline double jitter_floor(double jitter_scale) { return jitter_scale * 1e-6; }

// Stream used for the leading block of a joint estimate; the trailing block
// reuses the caller's stream so its jitter matches a marginal estimate.
inline RandomStream joint_lead_stream(const RandomStream& rng) { return rng.fork("joint.lead"); }

}  // namespace detail

template <class Digamma = StandardDigamma>
double knn_entropy(const SampleMatrix& points, int k, double jitter_scale, RandomStream rng,
                   Digamma psi = {}) {
    detail::check_estimable(points, k);
    return knn_entropy_exact(jittered(points, jitter_scale, rng), k, detail::jitter_floor(jitter_scale),
                             psi);
}

/// H(a, b) on the column concatenation [a | b]. `b` receives exactly the jitter
/// knn_entropy(b, ..., rng) would apply.
template <class Digamma = StandardDigamma>
double joint_entropy(const SampleMatrix& a, const SampleMatrix& b, int k, double jitter_scale,
                     RandomStream rng, Digamma psi = {}) {
    if (a.n_samples() != b.n_samples())
        throw AlignmentError("joint entropy operands have " + std::to_string(a.n_samples()) + " and " +
                             std::to_string(b.n_samples()) + " samples");
    const SampleMatrix joint = concat_columns(jittered(a, jitter_scale, detail::joint_lead_stream(rng)),
                                              jittered(b, jitter_scale, rng));
    detail::check_estimable(joint, k);
    return knn_entropy_exact(joint, k, detail::jitter_floor(jitter_scale), psi);
}

/// H(prev | cur) = H(prev, cur) - H(cur), both terms on identically jittered `cur`.
template <class Digamma = StandardDigamma>
double conditional_entropy(const SampleMatrix& prev, const SampleMatrix& cur, int k, double jitter_scale,
                           RandomStream rng, Digamma psi = {}) {
    const double joint = joint_entropy(prev, cur, k, jitter_scale, rng, psi);
    const double marginal = knn_entropy(cur, k, jitter_scale, rng, psi);
    return joint - marginal;
}

}  // namespace eood
