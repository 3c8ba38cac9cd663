#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mimo_crlb/design.hpp"
#include "mimo_crlb/errors.hpp"
#include "mimo_crlb/fisher.hpp"
#include "mimo_crlb/geometry.hpp"
#include "mimo_crlb/optimizer.hpp"

namespace mimo_crlb {

/// Sampling region of the simulated constellations, in cylindrical
/// coordinates around the origin. Radii are fractions of R.
struct SamplingRegion {
    double platform_rho_min = 0.5;
    double platform_rho_max = 1.0;
    double platform_z_min = 200.0;
    double platform_z_max = 300.0;
    double target_rho_min = 0.0;
    double target_rho_max = 2.0;
    double target_z_min = 300.0;
    double target_z_max = 600.0;
    double max_speed = 100.0;
};

struct StudyParams {
    std::size_t trials = 5000;
    std::size_t n_t = 4;
    std::size_t n_r = 6;
    double radius = 6000.0;
    double sigma0 = 1.0;
    DesignBounds bounds{1.0, 100.0};
    std::vector<double> w_values{0.1, 1.0, 10.0};
    std::uint64_t seed = 1;
    LocalConfig local;
    PsoConfig pso;
    SamplingRegion region;
    std::size_t threads = 1;
};

struct StudyRecord {
    std::size_t trial = 0;
    double w = 1.0;
    double f_alpha0 = 0.0;
    double f_local = 0.0;
    double f_vertex = 0.0;
    double f_opt = 0.0;
    double x_local = 1.0;
    double y_local = 1.0;
    double x_opt = 1.0;
    double y_opt = 1.0;
    DesignVector alpha_local;
    DesignVector alpha_opt;
    ClusterLabel cluster;
    std::size_t evals_local = 0;
    std::size_t evals_vertex = 0;
    std::size_t evals_pso = 0;
};

struct StudyOutcome {
    std::vector<StudyRecord> records;  // ordered by trial, then by w_values order
    std::size_t resampled = 0;         // scenarios rejected for an unobservable geometry
};

/// Independent generator for (seed, trial, stream). Streams of different
/// trials never depend on scheduling.
inline std::mt19937_64 trial_stream(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

namespace detail {

inline double uniform(std::mt19937_64& rng, double a, double b) { return a + (b - a) * unit_uniform(rng); }

inline Vec3 cylindrical_point(std::mt19937_64& rng, double rho_min, double rho_max, double z_min, double z_max) {
    const double rho = uniform(rng, rho_min, rho_max);
    const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double z = uniform(rng, z_min, z_max);
    return {rho * std::cos(phi), rho * std::sin(phi), z};
}

// Uniform direction via the axial projection (uniform in z on [-1, 1]),
// scaled by a uniform speed.
inline Vec3 random_velocity(std::mt19937_64& rng, double max_speed) {
    const double cz = uniform(rng, -1.0, 1.0);
    const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double s = std::sqrt(std::max(0.0, 1.0 - cz * cz));
    const double speed = uniform(rng, 0.0, max_speed);
    return speed * Vec3(s * std::cos(phi), s * std::sin(phi), cz);
}

}  // namespace detail

inline constexpr std::size_t kMaxSamplingRejections = 100;

/// Random constellation: Tx/Rx uniform in rho in [R/2, R], phi, z in
/// [200, 300] m; target rho in [0, 2R], z in [300, 600] m; every velocity a
/// uniform direction times a speed uniform in [0, 100] m/s.
inline Scenario sample_scenario(std::mt19937_64& rng, std::size_t n_t, std::size_t n_r, double radius,
                                double sigma0, const SamplingRegion& region = {}) {
    if (n_t == 0 || n_r == 0 || !(radius > 0.0) || !(sigma0 > 0.0)) {
        throw ValidationError("sample_scenario: need n_t, n_r >= 1 and positive R, sigma0");
    }
    for (std::size_t attempt = 0; attempt < kMaxSamplingRejections; ++attempt) {
        Scenario s;
        s.sigma0 = sigma0;
        s.surveillance_radius = radius;
        auto platform = [&] {
            PlatformState p;
            p.position = detail::cylindrical_point(rng, region.platform_rho_min * radius,
                                                   region.platform_rho_max * radius, region.platform_z_min,
                                                   region.platform_z_max);
            p.velocity = detail::random_velocity(rng, region.max_speed);
            return p;
        };
        s.txs.resize(n_t);
        s.rxs.resize(n_r);
        for (auto& p : s.txs) p = platform();
        for (auto& p : s.rxs) p = platform();
        s.target.position = detail::cylindrical_point(rng, region.target_rho_min * radius,
                                                      region.target_rho_max * radius, region.target_z_min,
                                                      region.target_z_max);
        s.target.velocity = detail::random_velocity(rng, region.max_speed);
        try {
            validate(s);
            return s;
        } catch (const SingularGeometryError&) {
        }
    }
    throw SamplingError("sample_scenario: 100 consecutive geometries rejected; check the sampling region");
}

struct ImprovementRatios {
    double x;  // position
    double y;  // velocity
};

/// Position and velocity diagonal-sum ratios of a CRLB against a reference.
inline ImprovementRatios improvement_ratios(const Mat6& crlb_alpha, const Mat6& crlb_alpha0) {
    for (const Mat6* m : {&crlb_alpha, &crlb_alpha0}) {
        const Eigen::LLT<Mat6> llt(0.5 * (*m + m->transpose()));
        if (!m->allFinite() || llt.info() != Eigen::Success) {
            throw ValidationError("improvement_ratios: CRLB is not positive definite");
        }
    }
    return {position_trace(crlb_alpha) / position_trace(crlb_alpha0),
            velocity_trace(crlb_alpha) / velocity_trace(crlb_alpha0)};
}

struct TrialOutcome {
    std::vector<StudyRecord> records;
    std::size_t resampled = 0;
};

/// Solves one trial for every weight in params.w_values. All weights share
/// the same scenario.
inline TrialOutcome run_trial(const StudyParams& params, std::size_t trial) {
    auto rng = trial_stream(params.seed, trial, 0);
    const DesignVector alpha0 = DesignVector::balanced(params.n_t, params.bounds);

    TrialOutcome out;
    FisherDecomposition decomp;
    for (;;) {
        const Scenario s = sample_scenario(rng, params.n_t, params.n_r, params.radius, params.sigma0, params.region);
        decomp = decompose(pair_jacobians(s), budget_from_noise_model(s), params.n_t, params.n_r);
        try {
            (void)crlb(fim(decomp, alpha0));
            break;
        } catch (const SingularFimError&) {
            if (++out.resampled >= kMaxSamplingRejections) {
                throw SamplingError("run_trial: 100 consecutive unobservable geometries");
            }
        }
    }
    const Mat6 crlb0 = crlb(fim(decomp, alpha0));

    for (std::size_t wi = 0; wi < params.w_values.size(); ++wi) {
        const double w = params.w_values[wi];
        BoxProblem problem = weighted_trace_problem(decomp, WeightMatrix::velocity_weighted(w), params.bounds);
        const double f0 = normalize(problem, alpha0);

        const SolveResult local = solve_local(problem, alpha0, params.local);
        const SolveResult vertex = solve_vertex(problem);
        auto pso_rng = trial_stream(params.seed, trial, 1 + wi);
        const SolveResult pso = solve_pso(problem, params.pso, pso_rng(), {alpha0, local.alpha_star});

        const auto r_local = improvement_ratios(crlb(fim(decomp, local.alpha_star)), crlb0);
        const auto r_opt = improvement_ratios(crlb(fim(decomp, pso.alpha_star)), crlb0);

        StudyRecord rec;
        rec.trial = trial;
        rec.w = w;
        rec.f_alpha0 = f0;
        rec.f_local = local.f_value;
        rec.f_vertex = vertex.f_value;
        rec.f_opt = pso.f_value;
        rec.x_local = r_local.x;
        rec.y_local = r_local.y;
        rec.x_opt = r_opt.x;
        rec.y_opt = r_opt.y;
        rec.alpha_local = local.alpha_star;
        rec.alpha_opt = pso.alpha_star;
        rec.cluster = classify_cluster(pso.alpha_star, params.bounds);
        rec.evals_local = local.evaluations;
        rec.evals_vertex = vertex.evaluations;
        rec.evals_pso = pso.evaluations;
        out.records.push_back(std::move(rec));
    }
    return out;
}

/// Runs every trial, in parallel when params.threads > 1. The output does not
/// depend on the thread count.
inline StudyOutcome run_study(const StudyParams& params) {
    if (params.trials == 0) throw ValidationError("run_study: need at least one trial");
    if (!(params.radius > 0.0)) throw ValidationError("run_study: R must be positive");
    if (params.w_values.empty()) throw ValidationError("run_study: need at least one weight");
    for (double w : params.w_values) {
        if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("run_study: weights must be positive");
    }

    std::vector<TrialOutcome> slots(params.trials);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= params.trials) return;
            try {
                slots[t] = run_trial(params, t);
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(params.trials);
                return;
            }
        }
    };

    const std::size_t n_threads = std::clamp<std::size_t>(params.threads, 1, params.trials);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    StudyOutcome out;
    out.records.reserve(params.trials * params.w_values.size());
    for (auto& slot : slots) {
        out.resampled += slot.resampled;
        for (auto& r : slot.records) out.records.push_back(std::move(r));
    }
    return out;
}

/// Empirical CDF as (value, fraction) steps. Repeated values collapse into
/// one step carrying the largest fraction.
inline std::vector<std::pair<double, double>> cdf(std::vector<double> values) {
    if (values.empty()) throw ValidationError("cdf: empty input");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    std::vector<std::pair<double, double>> out;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double frac = static_cast<double>(k + 1) / n;
        if (!out.empty() && out.back().first == values[k]) {
            out.back().second = frac;
        } else {
            out.emplace_back(values[k], frac);
        }
    }
    return out;
}

/// Number of records with weight w in each cluster C1..C6.
inline std::array<std::size_t, 6> cluster_counts(const std::vector<StudyRecord>& records, double w) {
    std::array<std::size_t, 6> counts{};
    for (const auto& r : records) {
        if (r.w == w) ++counts[static_cast<std::size_t>(r.cluster.label) - 1];
    }
    return counts;
}

}  // namespace mimo_crlb
