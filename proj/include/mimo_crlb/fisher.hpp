#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mimo_crlb/design.hpp"
#include "mimo_crlb/errors.hpp"
#include "mimo_crlb/geometry.hpp"

namespace mimo_crlb {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Relative pivot floor for the LDL^T factorization of the Fisher matrix.
inline constexpr double kPivotTolerance = 1e-12;

/// Gradients of one pair's bistatic range (rho) and range rate (rho_dot)
/// with respect to the target position. The range-rate gradient with respect
/// to the target velocity equals rho, and the range does not depend on it.
struct PairJacobian {
    Vec3 rho = Vec3::Zero();
    Vec3 rho_dot = Vec3::Zero();
};

namespace detail {

struct LegGradient {
    Vec3 rho;
    Vec3 rho_dot;
};

inline LegGradient leg_gradient(const PlatformState& p, const PlatformState& target) {
    const double d = range(p.position, target.position);
    if (d <= kMinSeparation) {
        throw SingularGeometryError("pair_jacobians: platform coincides with the target");
    }
    const double d_dot = range_rate(p, target);
    LegGradient g;
    g.rho = (target.position - p.position) / d;
    g.rho_dot = (target.velocity - p.velocity - d_dot * g.rho) / d;
    return g;
}

inline Mat6 symmetrized(const Mat6& m) { return 0.5 * (m + m.transpose()); }

}  // namespace detail

inline std::vector<PairJacobian> pair_jacobians(const Scenario& s) {
    validate(s);
    const std::size_t n_t = s.n_t();
    const std::size_t n_r = s.n_r();
    std::vector<detail::LegGradient> tx(n_t), rx(n_r);
    for (std::size_t i = 0; i < n_t; ++i) tx[i] = detail::leg_gradient(s.txs[i], s.target);
    for (std::size_t j = 0; j < n_r; ++j) rx[j] = detail::leg_gradient(s.rxs[j], s.target);

    std::vector<PairJacobian> out(n_t * n_r);
    for (std::size_t i = 0; i < n_t; ++i) {
        for (std::size_t j = 0; j < n_r; ++j) {
            auto& jac = out[pair_index(i, j, n_t, n_r)];
            jac.rho = tx[i].rho + rx[j].rho;
            jac.rho_dot = tx[i].rho_dot + rx[j].rho_dot;
        }
    }
    return out;
}

/// Full measurement Jacobian G of [r; r_dot] with respect to [x0; x0_dot].
/// Row k is [rho_k^T, 0^T]; row K + k is [rho_dot_k^T, rho_k^T].
inline Eigen::MatrixXd measurement_jacobian(const std::vector<PairJacobian>& jac) {
    const auto n = static_cast<Eigen::Index>(jac.size());
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2 * n, 6);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& p = jac[static_cast<std::size_t>(k)];
        g.block<1, 3>(k, 0) = p.rho.transpose();
        g.block<1, 3>(n + k, 0) = p.rho_dot.transpose();
        g.block<1, 3>(n + k, 3) = p.rho.transpose();
    }
    return g;
}

/// FIM(alpha) = sum_i (P_i / alpha_i + alpha_i V_i).
struct FisherDecomposition {
    std::vector<Mat6> p;
    std::vector<Mat6> v;

    std::size_t n_t() const { return p.size(); }
};

inline FisherDecomposition decompose(const std::vector<PairJacobian>& jac, const NoiseBudget& budget,
                                     std::size_t n_t, std::size_t n_r) {
    if (budget.size() != n_t * n_r || jac.size() != n_t * n_r) {
        throw BudgetError("decompose: budget/jacobian length does not match " + std::to_string(n_t) + "x" +
                          std::to_string(n_r));
    }
    FisherDecomposition d;
    d.p.assign(n_t, Mat6::Zero());
    d.v.assign(n_t, Mat6::Zero());
    for (std::size_t i = 0; i < n_t; ++i) {
        for (std::size_t j = 0; j < n_r; ++j) {
            const std::size_t k = pair_index(i, j, n_t, n_r);
            const double inv_c = 1.0 / budget[k];
            Vec6 a = Vec6::Zero();
            a.head<3>() = jac[k].rho;
            Vec6 b;
            b << jac[k].rho_dot, jac[k].rho;
            d.p[i].noalias() += inv_c * a * a.transpose();
            d.v[i].noalias() += inv_c * b * b.transpose();
        }
        d.p[i] = detail::symmetrized(d.p[i]);
        d.v[i] = detail::symmetrized(d.v[i]);
    }
    return d;
}

/// Fisher information G^T Sigma^-1 G with Sigma = diag(sigma; sigma_dot)
/// holding the bistatic range and range-rate variances.
inline Mat6 fim_direct(const std::vector<PairJacobian>& jac, const Eigen::VectorXd& sigma,
                       const Eigen::VectorXd& sigma_dot) {
    const auto n = static_cast<Eigen::Index>(jac.size());
    if (sigma.size() != n || sigma_dot.size() != n) {
        throw ValidationError("fim_direct: variance vectors must match the pair count");
    }
    if (!(sigma.array() > 0.0).all() || !(sigma_dot.array() > 0.0).all() || !sigma.allFinite() ||
        !sigma_dot.allFinite()) {
        throw DomainError("fim_direct: variances must be positive and finite");
    }
    const Eigen::MatrixXd g = measurement_jacobian(jac);
    Eigen::VectorXd inv_var(2 * n);
    inv_var << sigma.cwiseInverse(), sigma_dot.cwiseInverse();
    const Mat6 j = g.transpose() * inv_var.asDiagonal() * g;
    return detail::symmetrized(j);
}

inline Mat6 fim(const FisherDecomposition& d, const DesignVector& alpha) {
    if (alpha.size() != d.n_t()) {
        throw ValidationError("fim: alpha length does not match transmitter count");
    }
    require_positive(alpha, "fim");
    Mat6 j = Mat6::Zero();
    for (std::size_t i = 0; i < d.n_t(); ++i) {
        j += d.p[i] / alpha[i] + alpha[i] * d.v[i];
    }
    return detail::symmetrized(j);
}

/// Inverse of a Fisher matrix. Throws SingularFimError when the symmetrized
/// matrix is not positive definite, i.e. some LDL^T pivot falls below
/// kPivotTolerance times the largest diagonal entry.
inline Mat6 crlb(const Mat6& fisher) {
    const Mat6 j = detail::symmetrized(fisher);
    if (!j.allFinite()) {
        throw SingularFimError("singular Fisher information: non-finite entries");
    }
    const double scale = j.diagonal().maxCoeff();
    if (!(scale > 0.0)) {
        throw SingularFimError("singular Fisher information: non-positive diagonal");
    }
    const Eigen::LDLT<Mat6> ldlt(j);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > kPivotTolerance * scale)) {
        throw SingularFimError("singular Fisher information: target state is unobservable");
    }
    return detail::symmetrized(ldlt.solve(Mat6::Identity()));
}

/// Symmetric positive definite weighting of the CRLB trace.
class WeightMatrix {
public:
    WeightMatrix() : w_(Mat6::Identity()) {}
    explicit WeightMatrix(const Mat6& w) : w_(w) {
        if (!w.allFinite() || !w.isApprox(w.transpose(), 1e-12)) {
            throw DomainError("weight matrix must be finite and symmetric");
        }
        const Eigen::SelfAdjointEigenSolver<Mat6> eig(w);
        if (!(eig.eigenvalues().minCoeff() > 0.0)) {
            throw DomainError("weight matrix must be positive definite");
        }
        w_ = detail::symmetrized(w);
    }

    /// diag(I3, w * I3): unit weight on position, w on velocity.
    static WeightMatrix velocity_weighted(double w) {
        Vec6 diag;
        diag << 1.0, 1.0, 1.0, w, w, w;
        return WeightMatrix(Mat6(diag.asDiagonal()));
    }

    const Mat6& matrix() const { return w_; }

private:
    Mat6 w_;
};

/// tr(W * FIM(alpha)^-1).
inline double objective(const FisherDecomposition& d, const WeightMatrix& w, const DesignVector& alpha) {
    const Mat6 c = crlb(fim(d, alpha));
    return (w.matrix().cwiseProduct(c)).sum();
}

/// d f / d alpha_i = tr((-J^-1 W J^-1)^T (V_i - P_i / alpha_i^2)).
inline Eigen::VectorXd gradient(const FisherDecomposition& d, const WeightMatrix& w, const DesignVector& alpha) {
    const Mat6 c = crlb(fim(d, alpha));
    const Mat6 df_dj = -(c * w.matrix() * c);
    Eigen::VectorXd g(static_cast<Eigen::Index>(d.n_t()));
    for (std::size_t i = 0; i < d.n_t(); ++i) {
        const Mat6 dj = d.v[i] - d.p[i] / (alpha[i] * alpha[i]);
        g[static_cast<Eigen::Index>(i)] = df_dj.cwiseProduct(dj).sum();
    }
    return g;
}

/// Position (first three) and velocity (last three) diagonal sums of a CRLB.
inline double position_trace(const Mat6& c) { return c.diagonal().head<3>().sum(); }
inline double velocity_trace(const Mat6& c) { return c.diagonal().tail<3>().sum(); }

}  // namespace mimo_crlb
