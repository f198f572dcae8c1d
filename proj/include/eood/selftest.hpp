#pragma once

// Estimator self-checks against closed-form entropies. Used by
// `eood selftest` and by the unit tests.

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "eood/entropy.hpp"
#include "eood/rng.hpp"

namespace eood {

struct CheckResult {
    std::string name;
    double value = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

struct SelftestOptions {
    std::uint64_t seed = 0;
    int seeds = 5;
    // Test hook: swaps in a digamma that is off by one in its argument.
    bool inject_bad_digamma = false;
};

inline double gaussian_entropy(double dim, double log_det_cov = 0.0) {
    return 0.5 * (dim * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det_cov);
}

inline SampleMatrix standard_normal_matrix(std::size_t n, std::size_t dim, RandomStream rng) {
    std::vector<double> v(n * dim);
    for (double& x : v) x = rng.normal();
    return SampleMatrix(n, dim, std::move(v));
}

inline SampleMatrix uniform_matrix(std::size_t n, std::size_t dim, RandomStream rng) {
    std::vector<double> v(n * dim);
    for (double& x : v) x = rng.uniform();
    return SampleMatrix(n, dim, std::move(v));
}

/// (x, y) standard normal pair with correlation rho, as two n x 1 matrices.
inline std::pair<SampleMatrix, SampleMatrix> correlated_pair(std::size_t n, double rho, RandomStream rng) {
    std::vector<double> x(n), y(n);
    const double s = std::sqrt(1.0 - rho * rho);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = rng.normal();
        const double b = rng.normal();
        x[i] = a;
        y[i] = rho * a + s * b;
    }
    return {SampleMatrix(n, 1, std::move(x)), SampleMatrix(n, 1, std::move(y))};
}

namespace detail {

struct OffByOneDigamma {
    double operator()(double x) const { return digamma(x + 1.0); }
};

template <class Digamma>
std::vector<CheckResult> run_checks(const SelftestOptions& opt) {
    const Digamma psi{};
    const int k = 3;
    const double jitter = 1e-10;
    const double seeds = static_cast<double>(opt.seeds);
    std::vector<CheckResult> out;

    auto add = [&](std::string name, double value, double expected, double tol) {
        out.push_back({std::move(name), value, expected, tol, std::abs(value - expected) <= tol});
    };

    add("digamma(1) = -euler_gamma", psi(1.0), -std::numbers::egamma, 1e-10);
    add("digamma(2) = 1 - euler_gamma", psi(2.0), 1.0 - std::numbers::egamma, 1e-10);

    for (std::size_t d = 1; d <= 3; ++d) {
        double mean = 0.0;
        for (int s = 0; s < opt.seeds; ++s) {
            const auto base = seeded_rng(opt.seed + static_cast<std::uint64_t>(s), "selftest.gauss").fork(d);
            mean += knn_entropy(standard_normal_matrix(5000, d, base.fork("data")), k, jitter, base.fork("jitter"), psi);
        }
        add("gaussian d=" + std::to_string(d) + " N=5000", mean / seeds, gaussian_entropy(static_cast<double>(d)), 0.05);
    }

    {
        double mean = 0.0;
        for (int s = 0; s < opt.seeds; ++s) {
            const auto base = seeded_rng(opt.seed + static_cast<std::uint64_t>(s), "selftest.uniform");
            mean += knn_entropy(uniform_matrix(5000, 1, base.fork("data")), k, jitter, base.fork("jitter"), psi);
        }
        add("uniform[0,1] N=5000", mean / seeds, 0.0, 0.05);
    }

    std::vector<double> conditional;
    for (double rho : {0.0, 0.5, 0.9}) {
        double mean = 0.0;
        for (int s = 0; s < opt.seeds; ++s) {
            const auto base = seeded_rng(opt.seed + static_cast<std::uint64_t>(s), "selftest.conditional");
            const auto [x, y] = correlated_pair(4000, rho, base.fork("data"));
            mean += conditional_entropy(x, y, k, jitter, base.fork("jitter"), psi);
        }
        mean /= seeds;
        conditional.push_back(mean);
        char label[64];
        std::snprintf(label, sizeof label, "conditional rho=%.1f N=4000", rho);
        add(label, mean, gaussian_entropy(1.0, std::log(1.0 - rho * rho)), 0.1);
    }
    out.push_back({"conditional monotone in rho", conditional[2] - conditional[0], 0.0, 0.0,
                   conditional[0] > conditional[1] && conditional[1] > conditional[2]});

    {
        double worst = 0.0;
        for (int s = 0; s < opt.seeds; ++s) {
            const auto base = seeded_rng(opt.seed + static_cast<std::uint64_t>(s), "selftest.chain");
            const auto [x, y] = correlated_pair(500, 0.6, base.fork("data"));
            const auto rng = base.fork("jitter");
            const double lhs = conditional_entropy(x, y, k, jitter, rng, psi) + knn_entropy(y, k, jitter, rng, psi);
            worst = std::max(worst, std::abs(lhs - joint_entropy(x, y, k, jitter, rng, psi)));
        }
        add("chain rule H(x|y) + H(y) = H(x,y)", worst, 0.0, 1e-12);
    }
    return out;
}

}  // namespace detail

inline std::vector<CheckResult> run_selftest(const SelftestOptions& opt = {}) {
    if (opt.inject_bad_digamma) return detail::run_checks<detail::OffByOneDigamma>(opt);
    return detail::run_checks<StandardDigamma>(opt);
}

}  // namespace eood
