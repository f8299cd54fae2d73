#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "homodyne/analytic.hpp"
#include "homodyne/ensemble.hpp"
#include "homodyne/protocols.hpp"

using namespace homodyne;

TEST(ThetaRapid, Examples)
{
    EXPECT_NEAR(theta_rapid({0.0, 1.0, 0.0}, 0.0), 0.0, 1e-15);
    EXPECT_NEAR(theta_rapid({1.0, 0.0, 0.0}, 0.0), -std::numbers::pi / 2, 1e-15);
    EXPECT_EQ(theta_rapid({0.0, 0.0, -0.3}, 1.25), 1.25);
    EXPECT_EQ(theta_rapid({0.0, 0.0, 0.0}, 0.0), 0.0);
}

TEST(ThetaRapid, ZeroesTheQuadratureMean)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-0.57, 0.57);
    for (int i = 0; i < 1000; ++i) {
        const BlochState s{u(rng), u(rng), u(rng)};
        EXPECT_NEAR(quadrature_mean(s, theta_rapid(s, 0.0)), 0.0, 1e-15);
    }
}

TEST(ParseProtocol, ValidAndInvalid)
{
    EXPECT_TRUE(std::holds_alternative<RapidProtocol>(parse_protocol("rapid")));
    EXPECT_TRUE(std::holds_alternative<WrReducedProtocol>(parse_protocol("wr")));
    const auto f = parse_protocol("fixed:1.5");
    ASSERT_TRUE(std::holds_alternative<FixedPhaseProtocol>(f));
    EXPECT_EQ(std::get<FixedPhaseProtocol>(f).theta0, 1.5);
    EXPECT_EQ(to_string(f), "fixed:1.5");
    EXPECT_EQ(to_string(parse_protocol(to_string(f))), "fixed:1.5");
    for (const char* bad : {"", "Rapid", "fixed:", "fixed:abc", "fixed:1.0x", "fixed:nan", "wr2"})
        EXPECT_THROW(parse_protocol(bad), std::invalid_argument) << bad;
}

TEST(WrReduced, FieldExamples)
{
    const ModelParams p{1.0, 1.0, 0.0};
    EXPECT_EQ(wr_reduced_fields(0.0, p).drift, 0.0);
    EXPECT_DOUBLE_EQ(wr_reduced_fields(0.0, p).diffusion, std::sqrt(2.0));
    EXPECT_EQ(wr_reduced_fields(1.0, p).diffusion, 0.0);
    EXPECT_EQ(wr_reduced_fields(-1.0, p).diffusion, 0.0);
    EXPECT_DOUBLE_EQ(wr_reduced_fields(0.5, {2.0, 0.5, 0.0}).drift, -0.5);
}

TEST(WrReduced, StaysInInterval)
{
    SimConfig cfg;
    cfg.horizon = 4.0;
    cfg.record_stride = 1;
    for (std::uint64_t id = 0; id < 20; ++id) {
        const auto tr = simulate_trajectory({1.0, 1.0, 0.0}, WrReducedProtocol{}, cfg, id);
        for (const auto& s : tr.states) {
            ASSERT_LE(std::abs(s.x), 1.0);
            ASSERT_EQ(s.y, 0.0);
            ASSERT_EQ(s.z, 0.0);
        }
    }
}

TEST(WrReduced, MartingaleAtUnitEfficiency)
{
    SimConfig cfg;
    cfg.horizon = 1.0;
    cfg.record_stride = 250;
    const int n = 2000;
    std::vector<RunningStats> x(5);
    std::vector<RunningStats> inc(4);
    for (int id = 0; id < n; ++id) {
        const auto tr = simulate_trajectory({1.0, 1.0, 0.0}, WrReducedProtocol{}, cfg,
                                            static_cast<std::uint64_t>(id));
        for (std::size_t i = 0; i < tr.size(); ++i) {
            x[i].add(tr.states[i].x);
            if (i > 0)
                inc[i - 1].add(tr.states[i].x - tr.states[i - 1].x);
        }
    }
    for (const auto& s : x)
        EXPECT_LE(std::abs(s.mean), 4.0 * std::max(s.standard_error(), 1e-12));
    for (const auto& s : inc)
        EXPECT_LE(std::abs(s.mean), 4.0 * s.standard_error());
}

TEST(FixedPhase, ZeroPhaseKeepsStateInXzPlane)
{
    SimConfig cfg;
    cfg.horizon = 2.0;
    cfg.initial = {0.3, 0.0, -0.2};
    for (std::uint64_t id = 0; id < 10; ++id) {
        const auto tr = simulate_trajectory({1.0, 0.7, 0.0}, FixedPhaseProtocol{0.0}, cfg, id);
        for (const auto& s : tr.states)
            ASSERT_EQ(s.y, 0.0);
    }
}

// Under rapid feedback the applied phase annihilates the z noise at each step.
TEST(Rapid, AppliedPhaseCancelsPopulationNoise)
{
    SimConfig cfg;
    cfg.horizon = 1.0;
    cfg.record_stride = 1;
    const ModelParams p{1.0, 0.8, 0.0};
    for (std::uint64_t id = 0; id < 5; ++id) {
        const auto tr = simulate_trajectory(p, RapidProtocol{}, cfg, id);
        for (std::size_t i = 1; i < tr.size(); ++i) {
            const auto b = diffusion(tr.states[i - 1], p.with_theta(tr.thetas[i]));
            ASSERT_NEAR(b.dz, 0.0, 1e-14);
        }
    }
}

TEST(Rapid, PopulationFollowsDeterministicDecay)
{
    SimConfig cfg;
    cfg.horizon = 2.0;
    cfg.record_stride = 500;
    for (double eta : {1.0, 0.6}) {
        std::vector<RunningStats> z(5);
        for (std::uint64_t id = 0; id < 400; ++id) {
            const auto tr = simulate_trajectory({1.0, eta, 0.0}, RapidProtocol{}, cfg, id);
            for (std::size_t i = 0; i < tr.size(); ++i)
                z[i].add(tr.states[i].z);
        }
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double t = static_cast<double>(i) * 0.5;
            EXPECT_LT(z[i].variance(), 1e-24);
            EXPECT_NEAR(z[i].mean, z_deterministic(t, 1.0), 2.0 * cfg.dt);
        }
    }
}

// theta0 only rotates the measured quadrature about z; from I/2 the ensemble
// statistics of L are unchanged.
TEST(FixedPhase, PhaseIsIrrelevantForMeanEntropyFromMixedState)
{
    SimConfig cfg;
    cfg.horizon = 2.0;
    cfg.n_traj = 3000;
    cfg.record_stride = 250;
    const ModelParams p{1.0, 0.8, 0.0};
    const auto a = ensemble_mean_entropy(p, FixedPhaseProtocol{0.0}, cfg);
    cfg.seed = 1;
    const auto b = ensemble_mean_entropy(p, FixedPhaseProtocol{std::numbers::pi / 3}, cfg);
    for (std::size_t i = 1; i < a.mean_L.size(); ++i) {
        const double se = std::hypot(a.stderr_L[i], b.stderr_L[i]);
        EXPECT_LE(std::abs(a.mean_L[i] - b.mean_L[i]), 3.5 * se) << "t=" << a.time_grid[i];
    }
}
