#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "homodyne/speedup.hpp"
#include "oracles.hpp"

using namespace homodyne;

TEST(LGrid, DefaultGrid)
{
    const auto g = default_l_grid();
    ASSERT_EQ(g.size(), 40u);
    EXPECT_EQ(g.front(), 0.49);
    EXPECT_EQ(g.back(), 1e-4);
    EXPECT_NO_THROW(check_l_grid(g));
    EXPECT_THROW(check_l_grid({0.1, 0.2}), std::invalid_argument);
    EXPECT_THROW(check_l_grid({0.5, 0.2}), std::invalid_argument);
    EXPECT_THROW(check_l_grid({}), std::invalid_argument);
    EXPECT_THROW(log_grid_descending(0.1, 0.1, 3), std::invalid_argument);
}

TEST(Fig1, MatchesOracleRoot)
{
    for (double eta : {1.0, 0.8, 0.5}) {
        const std::vector<double> grid{0.4, 0.1, 1e-2, 1e-3};
        const auto c = speedup_fig1({1.0, eta, 0.0}, grid);
        ASSERT_FALSE(c.has_failures());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double t_m = oracle::bisect_decreasing(
                [&](double t) { return oracle::mean_linear_entropy_erfc(t, eta); }, grid[i], 1e-6,
                15.0);
            EXPECT_NEAR(c.t_numerator[i], t_m, 1e-7) << eta << " " << grid[i];
            EXPECT_EQ(c.t_denominator[i], time_to_feedback_entropy(grid[i], 1.0, eta));
            EXPECT_EQ(c.s[i], c.t_numerator[i] / c.t_denominator[i]);
        }
    }
}

TEST(Fig1, ApproachesOneNearMaximalMixedness)
{
    const auto c = speedup_fig1({1.0, 1.0, 0.0}, {0.4999});
    EXPECT_NEAR(c.s[0], 1.0, 1e-3);
}

TEST(Fig1, EfficiencyOrderingAtThePeak)
{
    const auto grid = default_l_grid();
    double prev_peak = 1e9;
    for (double eta : {1.0, 0.8, 0.5}) {
        const auto c = speedup_fig1({1.0, eta, 0.0}, grid);
        const double peak = *std::max_element(c.s.begin(), c.s.end());
        EXPECT_GT(peak, 1.0);
        EXPECT_LT(peak, prev_peak);
        prev_peak = peak;
    }
}

TEST(Fig1, RejectsZeroEfficiency)
{
    EXPECT_THROW(speedup_fig1({1.0, 0.0, 0.0}, {0.1}), std::invalid_argument);
}

TEST(Fig3, ClosedFormAtUnitEfficiency)
{
    const auto grid = log_grid_descending(1e-8, 0.45, 30);
    const auto c = speedup_fig3({1.0, 1.0, 0.0}, grid, SimConfig{});
    EXPECT_FALSE(c.stderr_s.has_value());
    for (std::size_t i = 1; i < c.s.size(); ++i)
        EXPECT_GT(c.s[i], c.s[i - 1]);
    const auto at = speedup_fig3({1.0, 1.0, 0.0}, {1e-6}, SimConfig{});
    EXPECT_GE(at.s[0], 1.8);
    EXPECT_LT(at.s[0], 2.0);
}

TEST(Fig3, LowerEfficiencyLiesBelow)
{
    SimConfig cfg;
    cfg.n_traj = 1000;
    cfg.horizon = 30.0;
    const auto grid = log_grid_descending(0.01, 0.3, 6);
    const auto ideal = speedup_fig3({1.0, 1.0, 0.0}, grid, cfg);
    const auto lossy = speedup_fig3({1.0, 0.95, 0.0}, grid, cfg);
    ASSERT_TRUE(lossy.stderr_s.has_value());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_EQ(lossy.censored[i], 0u);
        EXPECT_LT(lossy.s[i], ideal.s[i]) << grid[i] << " " << lossy.s[i] << " +- "
                                          << (*lossy.stderr_s)[i];
    }
}

TEST(Fig2, MonteCarloCurveHasUncertainties)
{
    SimConfig cfg;
    cfg.n_traj = 500;
    const auto c = speedup_fig2({1.0, 1.0, 0.0}, {0.3, 0.1}, cfg);
    ASSERT_TRUE(c.stderr_s.has_value());
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_TRUE(std::isfinite(c.s[i]));
        EXPECT_GT((*c.stderr_s)[i], 0.0);
        EXPECT_EQ(c.t_numerator[i], time_to_feedback_entropy(c.L[i], 1.0, 1.0));
    }
}

TEST(Fig2, AllCensoredBecomesNan)
{
    SimConfig cfg;
    cfg.n_traj = 64;
    cfg.horizon = 0.01;
    const auto c = speedup_fig2({1.0, 1.0, 0.0}, {1e-3}, cfg);
    EXPECT_TRUE(std::isnan(c.s[0]));
    EXPECT_TRUE(c.has_failures());
}
