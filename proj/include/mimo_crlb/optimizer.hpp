#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mimo_crlb/design.hpp"
#include "mimo_crlb/errors.hpp"
#include "mimo_crlb/fisher.hpp"

namespace mimo_crlb {

/// Box-constrained minimization problem over alpha in [l, u]^n.
///
/// `value` and `gradient` may throw SingularFimError at points where the
/// objective is undefined; every solver treats such points as infeasible.
/// `scale` is a positive factor applied by the local solver before it forms
/// projected-gradient steps and its stopping test, so that tolerances act on
/// a normalized objective. Solvers always report the unscaled value.
struct BoxProblem {
    std::size_t dim = 0;
    DesignBounds bounds;
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
    double scale = 1.0;
};

/// Sets `scale` so the local solver sees f(alpha) / f(alpha0) as a function
/// of alpha / (u - l). Returns f(alpha0).
inline double normalize(BoxProblem& p, const DesignVector& alpha0) {
    const double f0 = p.value(alpha0.values());
    if (!(f0 > 0.0) || !std::isfinite(f0)) {
        throw ValidationError("normalize: objective at alpha0 must be positive and finite");
    }
    p.scale = p.bounds.width() / f0;
    return f0;
}

/// f(alpha) = tr(W FIM(alpha)^-1) over the given bounds. The decomposition
/// and weight are copied into the closures.
inline BoxProblem weighted_trace_problem(const FisherDecomposition& d, const WeightMatrix& w,
                                         const DesignBounds& bounds) {
    BoxProblem p;
    p.dim = d.n_t();
    p.bounds = bounds;
    p.value = [d, w](const Eigen::VectorXd& a) { return objective(d, w, DesignVector(a)); };
    p.gradient = [d, w](const Eigen::VectorXd& a) { return gradient(d, w, DesignVector(a)); };
    return p;
}

enum class SolveMethod { local, pso, vertex };

inline const char* to_string(SolveMethod m) {
    switch (m) {
        case SolveMethod::local: return "local";
        case SolveMethod::pso: return "pso";
        case SolveMethod::vertex: return "vertex";
    }
    return "unknown";
}

struct SolveResult {
    DesignVector alpha_star;
    double f_value = std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
    SolveMethod method = SolveMethod::local;
};

struct LocalConfig {
    double projected_gradient_tol = 1e-8;
    std::size_t max_iterations = 200;
    double armijo_c1 = 1e-4;
    std::size_t max_backtracks = 60;
};

struct PsoConfig {
    std::size_t particles = 64;
    std::size_t iterations = 300;
    double inertia = 0.729;
    double cognitive = 1.49445;
    double social = 1.49445;
    double velocity_clamp = 0.5;  // fraction of the (log-space) box width
};

namespace detail {

inline Eigen::VectorXd project(const Eigen::VectorXd& x, const DesignBounds& b) {
    return x.cwiseMax(b.lower).cwiseMin(b.upper);
}

inline double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const DesignBounds& b) {
    return (project(x - g, b) - x).lpNorm<Eigen::Infinity>();
}

inline std::optional<double> try_value(const BoxProblem& p, const Eigen::VectorXd& x) {
    try {
        const double f = p.value(x);
        if (!std::isfinite(f)) return std::nullopt;
        return f;
    } catch (const SingularFimError&) {
        return std::nullopt;
    }
}

inline void check_problem(const BoxProblem& p) {
    if (p.dim == 0 || !p.value) {
        throw ValidationError("optimizer: problem needs a positive dimension and a value function");
    }
    if (!(p.scale > 0.0) || !std::isfinite(p.scale)) {
        throw ValidationError("optimizer: problem scale must be positive and finite");
    }
}

/// Uniform double in [0, 1) from the top 53 bits of the engine output; the
/// standard distributions are not reproducible across library versions.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

/// Projected quasi-Newton descent from alpha0.
///
/// Variables at a bound whose gradient pushes outward are held fixed; the
/// remaining ones take a BFGS step, followed by a projected backtracking
/// Armijo search. Stops when ||P(x - g) - x||_inf falls below the tolerance
/// (on the scaled objective) or the iteration budget is spent. The returned
/// point never has a larger objective than alpha0.
inline SolveResult solve_local(const BoxProblem& problem, const DesignVector& alpha0, const LocalConfig& cfg = {}) {
    detail::check_problem(problem);
    if (!problem.gradient) throw ValidationError("solve_local: problem has no gradient");
    if (alpha0.size() != problem.dim) throw ValidationError("solve_local: alpha0 has the wrong length");
    require_within(alpha0, problem.bounds, "solve_local");

    const auto n = static_cast<Eigen::Index>(problem.dim);
    const DesignBounds& box = problem.bounds;
    const double s = problem.scale;

    SolveResult res;
    res.method = SolveMethod::local;

    Eigen::VectorXd x = alpha0.values();
    double f_raw;
    Eigen::VectorXd g;
    try {
        f_raw = problem.value(x);
        g = s * problem.gradient(x);
    } catch (const SingularFimError& e) {
        throw UnsolvableError(std::string("solve_local: objective undefined at the initial point: ") + e.what());
    }
    double f = s * f_raw;
    res.evaluations = 1;

    Eigen::MatrixXd hess = Eigen::MatrixXd::Identity(n, n);
    bool hess_is_identity = true;
    {
        // first step moves at most a tenth of the box
        const double gmax = g.lpNorm<Eigen::Infinity>();
        if (gmax > 0.0) hess *= gmax / (0.1 * box.width());
    }
    const Eigen::MatrixXd hess_reset = hess;

    for (;;) {
        if (detail::projected_gradient_norm(x, g, box) <= cfg.projected_gradient_tol) {
            res.converged = true;
            break;
        }
        if (res.iterations >= cfg.max_iterations) break;

        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool pinned_low = x[i] <= box.lower && g[i] > 0.0;
            const bool pinned_high = x[i] >= box.upper && g[i] < 0.0;
            if (!pinned_low && !pinned_high) free.push_back(i);
        }
        if (free.empty()) {
            res.converged = true;
            break;
        }

        auto direction = [&](const Eigen::MatrixXd& h) {
            const auto m = static_cast<Eigen::Index>(free.size());
            Eigen::MatrixXd h_ff(m, m);
            Eigen::VectorXd g_f(m);
            for (Eigen::Index a = 0; a < m; ++a) {
                g_f[a] = g[free[a]];
                for (Eigen::Index b = 0; b < m; ++b) h_ff(a, b) = h(free[a], free[b]);
            }
            Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
            const Eigen::LLT<Eigen::MatrixXd> llt(h_ff);
            if (llt.info() != Eigen::Success) return d;
            const Eigen::VectorXd d_f = -llt.solve(g_f);
            for (Eigen::Index a = 0; a < m; ++a) d[free[a]] = d_f[a];
            return d;
        };

        Eigen::VectorXd d = direction(hess);
        if (!(g.dot(d) < 0.0) || !d.allFinite()) {
            hess = hess_reset;
            hess_is_identity = true;
            d = direction(hess);
        }

        bool accepted = false;
        Eigen::VectorXd x_new;
        double f_new = f;
        double f_new_raw = f_raw;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            double t = 1.0;
            for (std::size_t bt = 0; bt < cfg.max_backtracks; ++bt, t *= 0.5) {
                x_new = detail::project(x + t * d, box);
                if (x_new == x) break;
                const auto val = detail::try_value(problem, x_new);
                ++res.evaluations;
                if (val && s * *val <= f + cfg.armijo_c1 * g.dot(x_new - x) && s * *val < f) {
                    f_new_raw = *val;
                    f_new = s * *val;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                if (hess_is_identity) break;
                hess = hess_reset;
                hess_is_identity = true;
                d = direction(hess);
            }
        }
        if (!accepted) break;

        Eigen::VectorXd g_new;
        try {
            g_new = s * problem.gradient(x_new);
        } catch (const SingularFimError&) {
            break;
        }
        ++res.iterations;

        const Eigen::VectorXd step = x_new - x;
        const Eigen::VectorXd dg = g_new - g;
        const double sy = step.dot(dg);
        if (sy > 1e-12 * step.norm() * dg.norm()) {
            if (hess_is_identity) {
                hess = Eigen::MatrixXd::Identity(n, n) * (dg.squaredNorm() / sy);
                hess_is_identity = false;
            }
            const Eigen::VectorXd hs = hess * step;
            hess += dg * dg.transpose() / sy - hs * hs.transpose() / step.dot(hs);
            hess = 0.5 * (hess + hess.transpose());
        }

        x = x_new;
        f = f_new;
        f_raw = f_new_raw;
        g = g_new;
    }

    res.alpha_star = DesignVector(x);
    res.f_value = f_raw;
    return res;
}

/// Exhaustive search over the 2^n corners of the box. Vertex v sets
/// alpha_i = u when bit i of v is set and l otherwise. Ties within 1e-12
/// relative go to the lowest vertex index.
inline SolveResult solve_vertex(const BoxProblem& problem) {
    detail::check_problem(problem);
    if (problem.dim > 20) throw ValidationError("solve_vertex: more than 20 transmitters");

    const auto n = static_cast<Eigen::Index>(problem.dim);
    const std::uint64_t count = std::uint64_t{1} << problem.dim;
    SolveResult res;
    res.method = SolveMethod::vertex;
    bool found = false;
    Eigen::VectorXd x(n);
    for (std::uint64_t v = 0; v < count; ++v) {
        for (Eigen::Index i = 0; i < n; ++i) {
            x[i] = ((v >> i) & 1u) ? problem.bounds.upper : problem.bounds.lower;
        }
        const auto val = detail::try_value(problem, x);
        ++res.evaluations;
        if (!val) continue;
        if (!found || *val < res.f_value * (1.0 - 1e-12)) {
            res.f_value = *val;
            res.alpha_star = DesignVector(x);
            found = true;
        }
    }
    if (!found) throw UnsolvableError("solve_vertex: objective undefined at every vertex");
    res.iterations = 1;
    res.converged = true;
    return res;
}

/// Particle swarm over log(alpha).
///
/// The swarm is seeded with every vertex, then the optional extra seeds
/// (typically alpha0 and the local solution), then uniform random points.
/// Seeds are evaluated at their exact coordinates, so the result is never
/// worse than any seed. Reflecting walls keep particles in the box and
/// undefined points score +inf. Deterministic for a fixed seed.
inline SolveResult solve_pso(const BoxProblem& problem, const PsoConfig& cfg, std::uint64_t seed,
                             const std::vector<DesignVector>& extra_seeds = {}) {
    detail::check_problem(problem);
    if (problem.dim > 20) throw ValidationError("solve_pso: more than 20 transmitters");
    const std::size_t n_vertices = std::size_t{1} << problem.dim;
    if (cfg.particles < n_vertices + 2) {
        throw ValidationError("solve_pso: swarm of " + std::to_string(cfg.particles) + " cannot hold " +
                              std::to_string(n_vertices) + " vertex seeds plus two");
    }
    if (n_vertices + extra_seeds.size() > cfg.particles) {
        throw ValidationError("solve_pso: more seeds than particles");
    }
    for (const auto& e : extra_seeds) {
        if (e.size() != problem.dim) throw ValidationError("solve_pso: seed has the wrong length");
        require_within(e, problem.bounds, "solve_pso");
    }

    const auto n = static_cast<Eigen::Index>(problem.dim);
    const DesignBounds& box = problem.bounds;
    const double lo = std::log(box.lower);
    const double hi = std::log(box.upper);
    const double vmax = cfg.velocity_clamp * (hi - lo);
    constexpr double kInf = std::numeric_limits<double>::infinity();

    std::mt19937_64 rng(seed);
    auto uniform = [&rng](double a, double b) { return a + (b - a) * detail::unit_uniform(rng); };

    struct Particle {
        Eigen::VectorXd y, vel, best_y, best_alpha;
        double best_f = kInf;
    };
    std::vector<Particle> swarm(cfg.particles);

    SolveResult res;
    res.method = SolveMethod::pso;
    Eigen::VectorXd gbest_y, gbest_alpha;
    double gbest_f = kInf;

    auto evaluate = [&](Particle& pt, const Eigen::VectorXd& alpha) {
        const double f = detail::try_value(problem, alpha).value_or(kInf);
        ++res.evaluations;
        if (f < pt.best_f) {
            pt.best_f = f;
            pt.best_y = pt.y;
            pt.best_alpha = alpha;
        }
        if (f < gbest_f) {
            gbest_f = f;
            gbest_y = pt.y;
            gbest_alpha = alpha;
        }
    };

    for (std::size_t k = 0; k < cfg.particles; ++k) {
        Particle& pt = swarm[k];
        Eigen::VectorXd alpha(n);
        if (k < n_vertices) {
            for (Eigen::Index i = 0; i < n; ++i) alpha[i] = ((k >> i) & 1u) ? box.upper : box.lower;
        } else if (k < n_vertices + extra_seeds.size()) {
            alpha = extra_seeds[k - n_vertices].values();
        } else {
            alpha.resize(0);
        }
        pt.y.resize(n);
        if (alpha.size() == n) {
            pt.y = alpha.array().log().cwiseMax(lo).cwiseMin(hi).matrix();
        } else {
            for (Eigen::Index i = 0; i < n; ++i) pt.y[i] = uniform(lo, hi);
        }
        pt.vel.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) pt.vel[i] = uniform(-vmax, vmax);
        pt.best_y = pt.y;
        if (alpha.size() != n) alpha = pt.y.array().exp().cwiseMax(box.lower).cwiseMin(box.upper).matrix();
        evaluate(pt, alpha);
    }
    if (gbest_y.size() == 0) {
        gbest_y = swarm.front().y;
        gbest_alpha = gbest_y.array().exp().cwiseMax(box.lower).cwiseMin(box.upper).matrix();
    }

    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        for (Particle& pt : swarm) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const double r1 = detail::unit_uniform(rng);
                const double r2 = detail::unit_uniform(rng);
                double v = cfg.inertia * pt.vel[i] + cfg.cognitive * r1 * (pt.best_y[i] - pt.y[i]) +
                           cfg.social * r2 * (gbest_y[i] - pt.y[i]);
                v = std::clamp(v, -vmax, vmax);
                double y = pt.y[i] + v;
                if (y > hi) {
                    y = 2.0 * hi - y;
                    v = -v;
                } else if (y < lo) {
                    y = 2.0 * lo - y;
                    v = -v;
                }
                pt.y[i] = std::clamp(y, lo, hi);
                pt.vel[i] = v;
            }
            const Eigen::VectorXd alpha = pt.y.array().exp().cwiseMax(box.lower).cwiseMin(box.upper).matrix();
            evaluate(pt, alpha);
        }
        ++res.iterations;
    }

    if (!std::isfinite(gbest_f)) throw UnsolvableError("solve_pso: objective undefined at every visited point");
    res.alpha_star = DesignVector(gbest_alpha);
    res.f_value = gbest_f;
    res.converged = true;
    return res;
}

/// Cluster of a solution by how many transmitters sit at each bound.
/// C1: all at u. C2, C3, C4: one, two, three (or more, short of all) at l
/// with the rest at u. C5: all at l. C6: some component strictly inside.
enum class Cluster { C1 = 1, C2, C3, C4, C5, C6 };

inline const char* to_string(Cluster c) {
    static constexpr const char* names[] = {"C1", "C2", "C3", "C4", "C5", "C6"};
    return names[static_cast<int>(c) - 1];
}

struct ClusterLabel {
    Cluster label = Cluster::C6;
    std::size_t n_at_upper = 0;
    std::size_t n_at_lower = 0;

    bool is_vertex() const { return label != Cluster::C6; }
};

inline constexpr double kVertexTolerance = 1e-3;

inline ClusterLabel classify_cluster(const DesignVector& alpha, const DesignBounds& b,
                                     double tol = kVertexTolerance) {
    ClusterLabel out;
    const double band = tol * b.width();
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (std::abs(alpha[i] - b.lower) <= band) {
            ++out.n_at_lower;
        } else if (std::abs(alpha[i] - b.upper) <= band) {
            ++out.n_at_upper;
        }
    }
    const std::size_t n = alpha.size();
    if (n == 0 || out.n_at_lower + out.n_at_upper < n) {
        out.label = Cluster::C6;
    } else if (out.n_at_lower == 0) {
        out.label = Cluster::C1;
    } else if (out.n_at_lower == n) {
        out.label = Cluster::C5;
    } else {
        out.label = static_cast<Cluster>(std::min<std::size_t>(out.n_at_lower, 3) + 1);
    }
    return out;
}

}  // namespace mimo_crlb
