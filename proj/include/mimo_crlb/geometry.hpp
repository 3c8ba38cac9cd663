#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mimo_crlb/errors.hpp"

namespace mimo_crlb {

using Vec3 = Eigen::Vector3d;

/// Minimum target-to-platform separation in meters. Closer geometries are
/// rejected because the line-of-sight derivatives divide by the range.
inline constexpr double kMinSeparation = 1.0;

/// Position (m) and velocity (m/s) of a transmitter, receiver or the target,
/// all sampled at one common reference time.
struct PlatformState {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();

    bool finite() const { return position.allFinite() && velocity.allFinite(); }
};

/// A distributed MIMO radar constellation observing one moving target.
struct Scenario {
    std::vector<PlatformState> txs;
    std::vector<PlatformState> rxs;
    PlatformState target;
    double sigma0 = 1.0;               // noise-model constant
    double surveillance_radius = 6000;  // R, meters

    std::size_t n_t() const { return txs.size(); }
    std::size_t n_r() const { return rxs.size(); }
    std::size_t n_pairs() const { return txs.size() * rxs.size(); }
};

/// Flattened (Tx, Rx) pair index, row-major in the transmitter. Indices are
/// zero based: pair (i, j) maps to i * n_r + j.
inline std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n_t, std::size_t n_r) {
    if (i >= n_t || j >= n_r) {
        throw IndexError("pair_index: (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") outside " + std::to_string(n_t) + "x" + std::to_string(n_r) + " grid");
    }
    return i * n_r + j;
}

/// Inverse of pair_index.
inline std::pair<std::size_t, std::size_t> pair_of(std::size_t k, std::size_t n_t, std::size_t n_r) {
    if (n_r == 0 || k >= n_t * n_r) {
        throw IndexError("pair_of: index " + std::to_string(k) + " outside grid");
    }
    return {k / n_r, k % n_r};
}

inline double range(const Vec3& platform_pos, const Vec3& target_pos) {
    return (platform_pos - target_pos).norm();
}

/// Rate of change of the platform-target range: the relative velocity
/// projected on the line of sight.
inline double range_rate(const PlatformState& platform, const PlatformState& target) {
    const Vec3 los = platform.position - target.position;
    const double d = los.norm();
    if (!(d > 0.0)) {
        throw SingularGeometryError("range_rate: platform coincides with target");
    }
    return los.dot(platform.velocity - target.velocity) / d;
}

/// Throws unless the scenario is usable: non-empty constellation, finite
/// kinematics, positive noise constants and every platform at least
/// kMinSeparation away from the target.
inline void validate(const Scenario& s) {
    if (s.txs.empty() || s.rxs.empty()) {
        throw ValidationError("scenario needs at least one transmitter and one receiver");
    }
    if (!(s.sigma0 > 0.0) || !std::isfinite(s.sigma0)) {
        throw ValidationError("scenario sigma0 must be positive and finite");
    }
    if (!(s.surveillance_radius > 0.0) || !std::isfinite(s.surveillance_radius)) {
        throw ValidationError("scenario surveillance radius must be positive and finite");
    }
    if (!s.target.finite()) {
        throw ValidationError("target state is not finite");
    }
    auto check = [&](const std::vector<PlatformState>& list, const char* what) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (!list[i].finite()) {
                throw ValidationError(std::string(what) + " " + std::to_string(i) + " state is not finite");
            }
            if (range(list[i].position, s.target.position) <= kMinSeparation) {
                throw SingularGeometryError(std::string(what) + " " + std::to_string(i) +
                                            " is within " + std::to_string(kMinSeparation) +
                                            " m of the target");
            }
        }
    };
    check(s.txs, "tx");
    check(s.rxs, "rx");
}

/// Bistatic ranges and range rates for every pair, ordered by pair_index.
struct BistaticMeasurements {
    Eigen::VectorXd r;
    Eigen::VectorXd r_dot;
};

inline BistaticMeasurements bistatic_measurements(const Scenario& s) {
    const std::size_t n_t = s.n_t();
    const std::size_t n_r = s.n_r();
    if (n_t == 0 || n_r == 0) {
        throw ValidationError("bistatic_measurements: empty constellation");
    }

    std::vector<double> d_t(n_t), dd_t(n_t), d_r(n_r), dd_r(n_r);
    auto leg = [&](const PlatformState& p, const char* what, std::size_t idx, double& d, double& dd) {
        d = range(p.position, s.target.position);
        if (d <= kMinSeparation) {
            throw SingularGeometryError(std::string("bistatic_measurements: ") + what + " " +
                                        std::to_string(idx) + " coincides with the target");
        }
        dd = range_rate(p, s.target);
    };
    for (std::size_t i = 0; i < n_t; ++i) leg(s.txs[i], "tx", i, d_t[i], dd_t[i]);
    for (std::size_t j = 0; j < n_r; ++j) leg(s.rxs[j], "rx", j, d_r[j], dd_r[j]);

    BistaticMeasurements m{Eigen::VectorXd(n_t * n_r), Eigen::VectorXd(n_t * n_r)};
    for (std::size_t i = 0; i < n_t; ++i) {
        for (std::size_t j = 0; j < n_r; ++j) {
            const auto k = static_cast<Eigen::Index>(i * n_r + j);
            m.r[k] = d_t[i] + d_r[j];
            m.r_dot[k] = dd_t[i] + dd_r[j];
        }
    }
    return m;
}

}  // namespace mimo_crlb
