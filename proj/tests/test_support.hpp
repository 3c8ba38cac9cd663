#pragma once

// Test-only helpers and independent oracles. Nothing here calls into the
// fisher or optimizer code paths it is used to check.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "mimo_crlb/geometry.hpp"

namespace mimo_crlb::testing {

inline Vec3 random_vec(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    return {u(rng), u(rng), u(rng)};
}

/// Kilometer-scale constellation around a target near the origin.
inline Scenario random_scenario(std::mt19937_64& rng, std::size_t n_t, std::size_t n_r, double sigma0 = 1.0) {
    Scenario s;
    s.sigma0 = sigma0;
    s.surveillance_radius = 6000.0;
    auto platform = [&] {
        PlatformState p;
        p.position = random_vec(rng, -6000.0, 6000.0);
        p.position.z() = std::uniform_real_distribution<double>(200.0, 300.0)(rng);
        p.velocity = random_vec(rng, -60.0, 60.0);
        return p;
    };
    for (std::size_t i = 0; i < n_t; ++i) s.txs.push_back(platform());
    for (std::size_t j = 0; j < n_r; ++j) s.rxs.push_back(platform());
    s.target.position = random_vec(rng, -3000.0, 3000.0);
    s.target.position.z() = std::uniform_real_distribution<double>(300.0, 600.0)(rng);
    s.target.velocity = random_vec(rng, -60.0, 60.0);
    return s;
}

inline double oracle_distance(const Vec3& a, const Vec3& b) {
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(sum);
}

/// Range rate as the central difference of the range along straight-line
/// trajectories.
inline double oracle_range_rate(const PlatformState& p, const PlatformState& t, double h = 1e-3) {
    auto dist = [&](double tau) {
        return oracle_distance(p.position + tau * p.velocity, t.position + tau * t.velocity);
    };
    return (dist(h) - dist(-h)) / (2.0 * h);
}

/// 6x6 Fisher matrix with plain loops over an explicit 2K x 6 Jacobian.
inline std::array<std::array<double, 6>, 6> oracle_fim(const std::vector<std::array<double, 6>>& rows,
                                                       const std::vector<double>& variances) {
    std::array<std::array<double, 6>, 6> j{};
    for (std::size_t k = 0; k < rows.size(); ++k) {
        for (int a = 0; a < 6; ++a) {
            for (int b = 0; b < 6; ++b) j[a][b] += rows[k][a] * rows[k][b] / variances[k];
        }
    }
    return j;
}

/// Golden-section minimizer of a unimodal function on [a, b].
inline double golden_section(const std::function<double(double)>& f, double a, double b, double tol = 1e-9) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

/// All corners of [l, u]^n, built by recursion rather than bit tricks.
inline std::vector<std::vector<double>> explicit_vertices(std::size_t n, double l, double u) {
    if (n == 0) return {{}};
    std::vector<std::vector<double>> out;
    for (auto tail : explicit_vertices(n - 1, l, u)) {
        for (double v : {l, u}) {
            auto row = tail;
            row.push_back(v);
            out.push_back(row);
        }
    }
    return out;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace mimo_crlb::testing
