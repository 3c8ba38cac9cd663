#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "mimo_crlb/errors.hpp"
#include "mimo_crlb/geometry.hpp"

namespace mimo_crlb {

/// Box [lower, upper] shared by every transmitter's trade-off parameter.
struct DesignBounds {
    double lower = 1.0;
    double upper = 100.0;

    DesignBounds() = default;
    DesignBounds(double l, double u) : lower(l), upper(u) {
        if (!(l > 0.0) || !(u > l) || !std::isfinite(u)) {
            throw DomainError("design bounds need 0 < l < u, got [" + std::to_string(l) + ", " +
                              std::to_string(u) + "]");
        }
    }

    double width() const { return upper - lower; }
    /// Geometric midpoint sqrt(l*u), the balanced starting design.
    double balanced() const { return std::sqrt(lower * upper); }
};

/// Per-transmitter TD/DS trade-off: alpha_i = sigma_k / sigma_dot_k for every
/// pair k fed by transmitter i.
class DesignVector {
public:
    DesignVector() = default;
    explicit DesignVector(Eigen::VectorXd values) : values_(std::move(values)) {}
    DesignVector(std::initializer_list<double> values) : values_(static_cast<Eigen::Index>(values.size())) {
        Eigen::Index i = 0;
        for (double v : values) values_[i++] = v;
    }

    static DesignVector constant(std::size_t n_t, double value) {
        return DesignVector(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_t), value));
    }
    static DesignVector balanced(std::size_t n_t, const DesignBounds& b) { return constant(n_t, b.balanced()); }

    std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
    double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
    const Eigen::VectorXd& values() const { return values_; }

    bool positive() const { return values_.size() > 0 && (values_.array() > 0.0).all() && values_.allFinite(); }
    bool within(const DesignBounds& b) const {
        return (values_.array() >= b.lower).all() && (values_.array() <= b.upper).all();
    }

    bool operator==(const DesignVector& other) const {
        return values_.size() == other.values_.size() && values_ == other.values_;
    }

private:
    Eigen::VectorXd values_;
};

inline void require_positive(const DesignVector& alpha, const char* where) {
    if (!alpha.positive()) {
        throw DomainError(std::string(where) + ": every alpha must be positive and finite");
    }
}

inline void require_within(const DesignVector& alpha, const DesignBounds& b, const char* where) {
    if (!alpha.within(b)) {
        throw DomainError(std::string(where) + ": alpha outside bounds [" + std::to_string(b.lower) + ", " +
                          std::to_string(b.upper) + "]");
    }
}

/// Per-pair invariant c_k with c_k^2 = sigma_k * sigma_dot_k.
class NoiseBudget {
public:
    NoiseBudget() = default;
    explicit NoiseBudget(Eigen::VectorXd c) : c_(std::move(c)) {
        if (c_.size() == 0 || !c_.allFinite() || !(c_.array() > 0.0).all()) {
            throw BudgetError("noise budget entries must be positive and finite");
        }
    }

    std::size_t size() const { return static_cast<std::size_t>(c_.size()); }
    double operator[](std::size_t k) const { return c_[static_cast<Eigen::Index>(k)]; }
    const Eigen::VectorXd& values() const { return c_; }

private:
    Eigen::VectorXd c_;
};

struct WaveformAccuracy {
    double delta_tau;  // seconds
    double delta_f;    // Hz
};

/// Time-delay and Doppler accuracies of a waveform with effective bandwidth
/// b_eff, effective duration t_eff and energy ratio 2E/N0.
inline WaveformAccuracy accuracy_from_waveform(double energy_ratio, double b_eff, double t_eff) {
    if (!(energy_ratio > 0.0) || !(b_eff > 0.0) || !(t_eff > 0.0)) {
        throw DomainError("accuracy_from_waveform: inputs must be positive");
    }
    const double root = std::sqrt(energy_ratio);
    return {1.0 / (b_eff * root), 1.0 / (t_eff * root)};
}

/// Measurement variances implied by a design.
struct MeasurementVariances {
    Eigen::VectorXd sigma;      // bistatic range, m^2
    Eigen::VectorXd sigma_dot;  // bistatic range rate, (m/s)^2
};

/// sigma_k = c_k * alpha_i, sigma_dot_k = c_k / alpha_i, with i the
/// transmitter of pair k.
inline MeasurementVariances map_alpha(const NoiseBudget& budget, const DesignVector& alpha, std::size_t n_t,
                                      std::size_t n_r) {
    require_positive(alpha, "map_alpha");
    if (alpha.size() != n_t || budget.size() != n_t * n_r) {
        throw ValidationError("map_alpha: size mismatch between budget, alpha and constellation");
    }
    MeasurementVariances out{Eigen::VectorXd(budget.size()), Eigen::VectorXd(budget.size())};
    for (std::size_t i = 0; i < n_t; ++i) {
        for (std::size_t j = 0; j < n_r; ++j) {
            const std::size_t k = pair_index(i, j, n_t, n_r);
            const auto e = static_cast<Eigen::Index>(k);
            out.sigma[e] = budget[k] * alpha[i];
            out.sigma_dot[e] = budget[k] / alpha[i];
        }
    }
    return out;
}

/// Range-dependent noise budget: c_k = sigma0 * d_t,i * d_r,j / R^2.
inline NoiseBudget budget_from_noise_model(const Scenario& s) {
    validate(s);
    const std::size_t n_t = s.n_t();
    const std::size_t n_r = s.n_r();
    const double r2 = s.surveillance_radius * s.surveillance_radius;
    Eigen::VectorXd c(static_cast<Eigen::Index>(n_t * n_r));
    for (std::size_t i = 0; i < n_t; ++i) {
        const double d_t = range(s.txs[i].position, s.target.position);
        for (std::size_t j = 0; j < n_r; ++j) {
            const double d_r = range(s.rxs[j].position, s.target.position);
            c[static_cast<Eigen::Index>(pair_index(i, j, n_t, n_r))] = s.sigma0 * d_t * d_r / r2;
        }
    }
    return NoiseBudget(std::move(c));
}

}  // namespace mimo_crlb
