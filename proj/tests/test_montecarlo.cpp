#include <gtest/gtest.h>

#include <random>

#include "mimo_crlb/montecarlo.hpp"
#include "test_support.hpp"

using namespace mimo_crlb;

namespace {

StudyParams small_study(std::size_t trials, std::uint64_t seed) {
    StudyParams p;
    p.trials = trials;
    p.seed = seed;
    p.pso.iterations = 40;
    return p;
}

}  // namespace

TEST(SampleScenario, RespectsSamplingRegion) {
    std::mt19937_64 rng(61);
    const double r = 6000.0;
    for (int n = 0; n < 10000; ++n) {
        const Scenario s = sample_scenario(rng, 4, 6, r, 1.0);
        ASSERT_EQ(s.n_t(), 4u);
        ASSERT_EQ(s.n_r(), 6u);
        for (const auto* list : {&s.txs, &s.rxs}) {
            for (const auto& p : *list) {
                const double rho = std::hypot(p.position.x(), p.position.y());
                EXPECT_GE(rho, 3000.0 - 1e-9);
                EXPECT_LE(rho, 6000.0 + 1e-9);
                EXPECT_GE(p.position.z(), 200.0);
                EXPECT_LE(p.position.z(), 300.0);
                EXPECT_LE(p.velocity.norm(), 100.0 + 1e-12);
            }
        }
        EXPECT_LE(std::hypot(s.target.position.x(), s.target.position.y()), 12000.0 + 1e-9);
        EXPECT_GE(s.target.position.z(), 300.0);
        EXPECT_LE(s.target.position.z(), 600.0);
        EXPECT_LE(s.target.velocity.norm(), 100.0 + 1e-12);
    }
}

TEST(SampleScenario, VelocityDirectionsAreIsotropic) {
    std::mt19937_64 rng(62);
    Vec3 mean = Vec3::Zero();
    double z_sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const Scenario s = sample_scenario(rng, 1, 1, 6000.0, 1.0);
        const Vec3 v = s.target.velocity;
        if (v.norm() == 0.0) continue;
        mean += v.normalized();
        z_sq += v.normalized().z() * v.normalized().z();
    }
    EXPECT_LE((mean / n).norm(), 0.03);
    EXPECT_NEAR(z_sq / n, 1.0 / 3.0, 0.01);
}

TEST(SampleScenario, StreamsAreReproducible) {
    auto a = trial_stream(7, 3, 0);
    auto b = trial_stream(7, 3, 0);
    auto c = trial_stream(7, 4, 0);
    const Scenario sa = sample_scenario(a, 4, 6, 6000.0, 1.0);
    const Scenario sb = sample_scenario(b, 4, 6, 6000.0, 1.0);
    const Scenario sc = sample_scenario(c, 4, 6, 6000.0, 1.0);
    EXPECT_EQ(sa.target.position, sb.target.position);
    EXPECT_EQ(sa.txs[3].velocity, sb.txs[3].velocity);
    EXPECT_NE(sa.target.position, sc.target.position);
}

TEST(SampleScenario, ImpossibleRegionRaisesSamplingError) {
    std::mt19937_64 rng(63);
    SamplingRegion region;
    // platforms and target squeezed onto the same point
    region.platform_rho_min = region.platform_rho_max = 0.0;
    region.target_rho_min = region.target_rho_max = 0.0;
    region.platform_z_min = region.platform_z_max = 300.0;
    region.target_z_min = region.target_z_max = 300.0;
    EXPECT_THROW(sample_scenario(rng, 2, 2, 6000.0, 1.0, region), SamplingError);
}

TEST(ImprovementRatios, ExamplesAndErrors) {
    std::mt19937_64 rng(64);
    const Scenario s = mimo_crlb::testing::random_scenario(rng, 4, 6);
    const auto d = decompose(pair_jacobians(s), budget_from_noise_model(s), 4, 6);
    const Mat6 c0 = crlb(fim(d, DesignVector::constant(4, 10.0)));
    const Mat6 c1 = crlb(fim(d, DesignVector{1.0, 100.0, 100.0, 3.0}));

    const auto same = improvement_ratios(c0, c0);
    EXPECT_EQ(same.x, 1.0);
    EXPECT_EQ(same.y, 1.0);

    const auto half = improvement_ratios(0.5 * c0, c0);
    EXPECT_DOUBLE_EQ(half.x, 0.5);
    EXPECT_DOUBLE_EQ(half.y, 0.5);

    const auto r = improvement_ratios(c1, c0);
    EXPECT_DOUBLE_EQ(r.x, (c1(0, 0) + c1(1, 1) + c1(2, 2)) / (c0(0, 0) + c0(1, 1) + c0(2, 2)));
    EXPECT_DOUBLE_EQ(r.y, (c1(3, 3) + c1(4, 4) + c1(5, 5)) / (c0(3, 3) + c0(4, 4) + c0(5, 5)));

    EXPECT_THROW(improvement_ratios(-c0, c0), ValidationError);
}

TEST(RunStudy, RecordsSatisfySolverGuarantees) {
    const StudyOutcome out = run_study(small_study(12, 5));
    ASSERT_EQ(out.records.size(), 36u);
    for (std::size_t k = 0; k < out.records.size(); ++k) {
        const auto& r = out.records[k];
        EXPECT_EQ(r.trial, k / 3);
        EXPECT_LE(r.f_opt, r.f_local);
        EXPECT_LE(r.f_local, r.f_alpha0);
        EXPECT_LE(r.f_opt, r.f_vertex);
        EXPECT_GT(r.x_opt, 0.0);
        EXPECT_GT(r.y_opt, 0.0);
        EXPECT_TRUE(r.alpha_opt.within(DesignBounds(1.0, 100.0)));
        EXPECT_EQ(r.evals_vertex, 16u);
    }
    for (double w : {0.1, 1.0, 10.0}) {
        std::size_t total = 0;
        for (auto c : cluster_counts(out.records, w)) total += c;
        EXPECT_EQ(total, 12u);
    }
}

TEST(RunStudy, IndependentOfThreadCount) {
    StudyParams p = small_study(9, 77);
    p.w_values = {1.0};
    const StudyOutcome one = run_study(p);
    p.threads = 4;
    const StudyOutcome four = run_study(p);
    ASSERT_EQ(one.records.size(), four.records.size());
    for (std::size_t k = 0; k < one.records.size(); ++k) {
        EXPECT_EQ(one.records[k].f_opt, four.records[k].f_opt);
        EXPECT_EQ(one.records[k].alpha_opt, four.records[k].alpha_opt);
        EXPECT_EQ(one.records[k].x_local, four.records[k].x_local);
        EXPECT_EQ(one.records[k].evals_local, four.records[k].evals_local);
    }
    EXPECT_EQ(one.resampled, four.resampled);
}

TEST(RunStudy, RatiosInvariantToSigma0) {
    StudyParams p = small_study(6, 9);
    const StudyOutcome base = run_study(p);
    p.sigma0 = 10.0;
    const StudyOutcome scaled = run_study(p);
    for (std::size_t k = 0; k < base.records.size(); ++k) {
        const auto& a = base.records[k];
        const auto& b = scaled.records[k];
        EXPECT_LE(mimo_crlb::testing::rel_err(b.f_alpha0, 10.0 * a.f_alpha0), 1e-12);
        EXPECT_LE(mimo_crlb::testing::rel_err(b.x_opt, a.x_opt), 1e-9);
        EXPECT_LE(mimo_crlb::testing::rel_err(b.y_opt, a.y_opt), 1e-9);
        EXPECT_EQ(a.cluster.label, b.cluster.label);
    }
}

TEST(RunStudy, RejectsBadParams) {
    StudyParams p = small_study(0, 1);
    EXPECT_THROW(run_study(p), ValidationError);
    p.trials = 1;
    p.w_values = {};
    EXPECT_THROW(run_study(p), ValidationError);
    p.w_values = {-1.0};
    EXPECT_THROW(run_study(p), ValidationError);
}

TEST(Cdf, Examples) {
    const auto c = cdf({3.0, 1.0, 2.0});
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c[0], std::make_pair(1.0, 1.0 / 3.0));
    EXPECT_EQ(c[1], std::make_pair(2.0, 2.0 / 3.0));
    EXPECT_EQ(c[2], std::make_pair(3.0, 1.0));

    const auto constant = cdf({4.0, 4.0, 4.0});
    ASSERT_EQ(constant.size(), 1u);
    EXPECT_EQ(constant[0], std::make_pair(4.0, 1.0));

    const auto dup = cdf({1.0, 1.0});
    ASSERT_EQ(dup.size(), 1u);
    EXPECT_EQ(dup[0], std::make_pair(1.0, 1.0));

    EXPECT_THROW(cdf({}), ValidationError);
}
