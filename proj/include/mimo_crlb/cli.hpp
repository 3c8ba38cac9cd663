#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mimo_crlb/design.hpp"
#include "mimo_crlb/errors.hpp"
#include "mimo_crlb/fisher.hpp"
#include "mimo_crlb/io.hpp"
#include "mimo_crlb/montecarlo.hpp"
#include "mimo_crlb/optimizer.hpp"

namespace mimo_crlb::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kNumerical = 2, kIo = 3 };

struct CommonArgs {
    std::string scenario;
    std::vector<double> bounds{1.0, 100.0};
    double sigma0 = 0.0;  // 0: keep the scenario's value
};

struct CrlbArgs : CommonArgs {
    std::vector<double> alpha;  // empty: balanced sqrt(l*u)
    double w = 1.0;
};

struct OptimizeArgs : CommonArgs {
    std::string method = "all";
    double w = 1.0;
    std::uint64_t seed = 1;
    LocalConfig local;
    PsoConfig pso;
};

struct MonteCarloArgs {
    StudyParams params;
    std::string out;
};

struct SampleArgs {
    std::size_t n_t = 4;
    std::size_t n_r = 6;
    double radius = 6000.0;
    double sigma0 = 1.0;
    std::uint64_t seed = 1;
    std::string out;
};

namespace detail {

inline DesignBounds bounds_from(const std::vector<double>& b) {
    if (b.size() != 2) throw ValidationError("--bounds expects two values l,u");
    return DesignBounds(b[0], b[1]);
}

inline Scenario load(const CommonArgs& a) {
    Scenario s = io::load_scenario(a.scenario);
    if (a.sigma0 != 0.0) {
        s.sigma0 = a.sigma0;
        validate(s);
    }
    return s;
}

inline nlohmann::json result_json(const SolveResult& r, const DesignBounds& b) {
    return nlohmann::json{{"method", to_string(r.method)},
                          {"alpha_star", io::detail::vec_to_json(r.alpha_star.values())},
                          {"f_value", r.f_value},
                          {"iterations", r.iterations},
                          {"evaluations", r.evaluations},
                          {"converged", r.converged},
                          {"cluster", to_string(classify_cluster(r.alpha_star, b).label)}};
}

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const SingularFimError& e) {
        err << "error: " << e.what() << '\n';
        return kNumerical;
    } catch (const UnsolvableError& e) {
        err << "error: " << e.what() << '\n';
        return kNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }
}

}  // namespace detail

/// Prints the CRLB at a design, its position/velocity diagonal sums and the
/// weighted trace f(alpha) as JSON.
inline int cmd_crlb(const CrlbArgs& a, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const Scenario s = detail::load(a);
        const DesignBounds b = detail::bounds_from(a.bounds);
        DesignVector alpha = DesignVector::balanced(s.n_t(), b);
        if (!a.alpha.empty()) {
            if (a.alpha.size() != s.n_t()) {
                throw ValidationError("--alpha needs " + std::to_string(s.n_t()) + " values");
            }
            alpha = DesignVector(Eigen::Map<const Eigen::VectorXd>(a.alpha.data(),
                                                                   static_cast<Eigen::Index>(a.alpha.size())));
        }
        require_within(alpha, b, "--alpha");
        const WeightMatrix w = WeightMatrix::velocity_weighted(a.w);

        const auto d = decompose(pair_jacobians(s), budget_from_noise_model(s), s.n_t(), s.n_r());
        const Mat6 c = crlb(fim(d, alpha));
        nlohmann::json report{{"alpha", io::detail::vec_to_json(alpha.values())},
                              {"w", a.w},
                              {"crlb", io::matrix_to_json(c)},
                              {"position_trace", position_trace(c)},
                              {"velocity_trace", velocity_trace(c)},
                              {"objective", (w.matrix().cwiseProduct(c)).sum()}};
        out << report.dump(2) << '\n';
        return int{kOk};
    });
}

/// Runs the requested solver(s) from alpha0 = sqrt(l*u). "pso" and "all"
/// seed the swarm with the local solution.
inline int cmd_optimize(const OptimizeArgs& a, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        if (a.method != "local" && a.method != "pso" && a.method != "vertex" && a.method != "all") {
            throw ValidationError("--method must be one of local, pso, vertex, all");
        }
        const Scenario s = detail::load(a);
        const DesignBounds b = detail::bounds_from(a.bounds);
        const auto d = decompose(pair_jacobians(s), budget_from_noise_model(s), s.n_t(), s.n_r());
        BoxProblem problem = weighted_trace_problem(d, WeightMatrix::velocity_weighted(a.w), b);
        const DesignVector alpha0 = DesignVector::balanced(s.n_t(), b);
        const double f0 = normalize(problem, alpha0);

        std::vector<SolveResult> results;
        if (a.method == "vertex") {
            results.push_back(solve_vertex(problem));
        } else {
            const SolveResult local = solve_local(problem, alpha0, a.local);
            if (a.method == "local" || a.method == "all") results.push_back(local);
            if (a.method == "all") results.push_back(solve_vertex(problem));
            if (a.method == "pso" || a.method == "all") {
                results.push_back(solve_pso(problem, a.pso, a.seed, {alpha0, local.alpha_star}));
            }
        }

        nlohmann::json report;
        if (a.method == "all") {
            const auto by_method = [&](SolveMethod m) {
                return *std::find_if(results.begin(), results.end(), [m](const auto& r) { return r.method == m; });
            };
            const double f_pso = by_method(SolveMethod::pso).f_value;
            const bool pso_le_vertex = f_pso <= by_method(SolveMethod::vertex).f_value;
            const bool pso_le_local = f_pso <= by_method(SolveMethod::local).f_value;
            std::stable_sort(results.begin(), results.end(),
                             [](const auto& x, const auto& y) { return x.f_value < y.f_value; });
            nlohmann::json list = nlohmann::json::array();
            for (const auto& r : results) list.push_back(detail::result_json(r, b));
            report = {{"w", a.w},
                      {"f_alpha0", f0},
                      {"results", list},
                      {"pso_le_vertex", pso_le_vertex},
                      {"pso_le_local", pso_le_local}};
        } else {
            report = detail::result_json(results.front(), b);
            report["w"] = a.w;
            report["f_alpha0"] = f0;
        }
        out << report.dump(2) << '\n';
        return int{kOk};
    });
}

/// Runs the study and writes PATH plus PATH_cdf and PATH_clusters
/// companions. A short summary goes to `err`.
inline int cmd_montecarlo(const MonteCarloArgs& a, std::ostream& err) {
    return detail::guarded(err, [&] {
        if (a.out.empty()) throw ValidationError("--out is required");
        const std::string cdf_path = io::companion_path(a.out, "_cdf");
        const std::string cluster_path = io::companion_path(a.out, "_clusters");
        std::ofstream main_csv(a.out, std::ios::binary), cdf_csv(cdf_path, std::ios::binary),
            cluster_csv(cluster_path, std::ios::binary);
        if (!main_csv || !cdf_csv || !cluster_csv) throw IoError("cannot write " + a.out + " (or its companions)");

        const StudyOutcome study = run_study(a.params);
        io::write_study_csv(main_csv, study.records);
        io::write_cdf_csv(cdf_csv, study.records, a.params.w_values);
        io::write_cluster_csv(cluster_csv, study.records, a.params.w_values);
        main_csv.flush();
        cdf_csv.flush();
        cluster_csv.flush();
        if (!main_csv || !cdf_csv || !cluster_csv) throw IoError("write failed for " + a.out);

        err << a.params.trials << " trials, " << study.resampled << " unobservable geometries resampled\n";
        for (double w : a.params.w_values) {
            const auto counts = cluster_counts(study.records, w);
            err << "w=" << io::format_double(w) << " clusters:";
            for (std::size_t i = 0; i < counts.size(); ++i) err << " C" << (i + 1) << '=' << counts[i];
            err << '\n';
        }
        return int{kOk};
    });
}

/// Writes one random constellation as scenario JSON.
inline int cmd_sample(const SampleArgs& a, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        auto rng = trial_stream(a.seed, 0, 0);
        const Scenario s = sample_scenario(rng, a.n_t, a.n_r, a.radius, a.sigma0);
        const std::string text = io::scenario_to_json(s).dump(2) + "\n";
        if (a.out.empty()) {
            out << text;
        } else {
            std::ofstream f(a.out, std::ios::binary);
            if (!f || !(f << text)) throw IoError("cannot write " + a.out);
        }
        return int{kOk};
    });
}

/// Full command-line entry point.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"CRLB analysis and transmitter trade-off design for distributed MIMO radar"};
    app.require_subcommand(1);

    CrlbArgs crlb_args;
    OptimizeArgs opt_args;
    MonteCarloArgs mc_args;
    SampleArgs sample_args;
    std::size_t threads = 0;

    auto add_common = [](CLI::App* sub, CommonArgs& c) {
        sub->add_option("--scenario", c.scenario, "Scenario JSON file")->required();
        sub->add_option("--bounds", c.bounds, "Design bounds l,u")->delimiter(',')->expected(2);
        sub->add_option("--sigma0", c.sigma0, "Override the scenario noise constant");
    };

    auto* crlb_cmd = app.add_subcommand("crlb", "CRLB and weighted trace at one design");
    add_common(crlb_cmd, crlb_args);
    crlb_cmd->add_option("--alpha", crlb_args.alpha, "Design a1,a2,... (default sqrt(l*u))")->delimiter(',');
    crlb_cmd->add_option("--w", crlb_args.w, "Velocity weight");

    auto* opt_cmd = app.add_subcommand("optimize", "Optimize the transmitter trade-off");
    add_common(opt_cmd, opt_args);
    opt_cmd->add_option("--method", opt_args.method, "local, pso, vertex or all");
    opt_cmd->add_option("--w", opt_args.w, "Velocity weight");
    opt_cmd->add_option("--seed", opt_args.seed, "Swarm seed");
    opt_cmd->add_option("--pso-particles", opt_args.pso.particles);
    opt_cmd->add_option("--pso-iterations", opt_args.pso.iterations);
    opt_cmd->add_option("--local-max-iter", opt_args.local.max_iterations);

    auto& p = mc_args.params;
    std::vector<double> mc_bounds{1.0, 100.0};
    auto* mc_cmd = app.add_subcommand("montecarlo", "Monte Carlo study over random constellations");
    mc_cmd->add_option("--trials", p.trials, "Number of constellations");
    mc_cmd->add_option("--w", p.w_values, "Velocity weights w1,w2,...")->delimiter(',');
    mc_cmd->add_option("--seed", p.seed, "Master seed");
    mc_cmd->add_option("--sigma0", p.sigma0, "Noise-model constant");
    mc_cmd->add_option("--bounds", mc_bounds, "Design bounds l,u")->delimiter(',')->expected(2);
    mc_cmd->add_option("--out", mc_args.out, "Output CSV path")->required();
    mc_cmd->add_option("--threads", threads, "Worker threads (0: all cores)");
    mc_cmd->add_option("--nt", p.n_t, "Transmitters");
    mc_cmd->add_option("--nr", p.n_r, "Receivers");
    mc_cmd->add_option("--radius", p.radius, "Surveillance radius R in meters");
    mc_cmd->add_option("--pso-particles", p.pso.particles);
    mc_cmd->add_option("--pso-iterations", p.pso.iterations);
    mc_cmd->add_option("--local-max-iter", p.local.max_iterations);

    auto* sample_cmd = app.add_subcommand("sample", "Write a random scenario JSON");
    sample_cmd->add_option("--seed", sample_args.seed);
    sample_cmd->add_option("--nt", sample_args.n_t);
    sample_cmd->add_option("--nr", sample_args.n_r);
    sample_cmd->add_option("--radius", sample_args.radius);
    sample_cmd->add_option("--sigma0", sample_args.sigma0);
    sample_cmd->add_option("--out", sample_args.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? int{kOk} : int{kValidation};
    }

    if (crlb_cmd->parsed()) return cmd_crlb(crlb_args, out, err);
    if (opt_cmd->parsed()) return cmd_optimize(opt_args, out, err);
    if (sample_cmd->parsed()) return cmd_sample(sample_args, out, err);
    return detail::guarded(err, [&] {
        p.bounds = detail::bounds_from(mc_bounds);
        p.threads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
        return cmd_montecarlo(mc_args, err);
    });
}

}  // namespace mimo_crlb::cli
