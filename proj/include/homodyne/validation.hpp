#pragma once

// Cross-checks run by `homodyne validate`: closed forms against each other,
// quadrature against Monte Carlo, normalizations and round trips.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "homodyne/analytic.hpp"
#include "homodyne/ensemble.hpp"
#include "homodyne/protocols.hpp"
#include "homodyne/quadrature.hpp"
#include "homodyne/speedup.hpp"

namespace homodyne {

struct CheckResult
{
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationOptions
{
    bool quick = false;
    std::uint64_t seed = 0;
    std::uint64_t n_traj = 5000;
    unsigned threads = 1;
};

namespace detail {

inline CheckResult check(std::string name, bool ok, std::string detail = {})
{
    return {std::move(name), ok, std::move(detail)};
}

inline std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::vector<CheckResult> quick_checks()
{
    std::vector<CheckResult> out;
    const ModelParams unit{1.0, 1.0, 0.0};

    {
        bool ok = true;
        for (double th : {0.0, 0.7, 2.0})
            for (double eta : {0.0, 0.5, 1.0}) {
                const ModelParams p{1.3, eta, th};
                ok = ok && drift(BlochState::ground(), p) == BlochVelocity{} &&
                     diffusion(BlochState::ground(), p) == BlochVelocity{0.0, 0.0, 0.0};
            }
        out.push_back(check("ground state is a fixed point", ok));
    }
    out.push_back(check("L(I/2) = 1/2", linear_entropy(BlochState::maximally_mixed()) == 0.5));
    out.push_back(check("z(ln2/2) = -1/2",
                        std::abs(z_deterministic(std::log(2.0) / 2.0, 1.0) + 0.5) < 1e-15));
    out.push_back(check("L_fb(eta=0.5, u=0.5) = 0.3125",
                        std::abs(feedback_linear_entropy(std::log(2.0) / 2.0, 1.0, 0.5) -
                                 0.3125) < 1e-15));

    {
        double worst = 0.0;
        for (double eta : {0.0, 0.5, 0.8, 0.95, 1.0})
            for (double gt = 0.01; gt <= 6.0; gt *= 1.3) {
                const double L = feedback_linear_entropy(gt, 1.0, eta);
                const double back = time_to_feedback_entropy(L, 1.0, eta);
                worst = std::max(worst, std::abs(back - gt) / gt);
            }
        out.push_back(check("time_to_L_feedback round trip <= 1e-10", worst <= 1e-10,
                            "worst relative error " + num(worst)));
    }

    {
        double worst = 0.0;
        for (double gt : {0.2, 1.0, 3.0})
            for (double eta : {1.0, 0.8, 0.5}) {
                const RDensity p(gt, 1.0, eta);
                const double sd = std::sqrt(p.reference_variance());
                const double mass =
                    integrate_adaptive([&](double r) { return p(r); }, -12 * sd, 12 * sd, 1e-10);
                worst = std::max(worst, std::abs(mass - 1.0));
            }
        out.push_back(check("P(R,t) integrates to 1 within 1e-8", worst <= 1e-8,
                            "worst deviation " + num(worst)));
    }

    {
        bool ok = true;
        double worst = 0.0;
        for (double gt : {0.1, 0.5, 2.0})
            for (double R : {-1.5, 0.0, 0.4, 3.0})
                for (double eta : {0.3, 0.8, 1.0}) {
                    const QubitMatrix rho = rho_given_r(gt, R, 1.0, eta);
                    ok = ok && is_valid_state(rho, 1e-12);
                    const QubitMatrix sig = appendix_sigma(QubitMatrix::Identity() / 2.0, R, gt,
                                                           1.0, eta);
                    worst = std::max(worst, (sig - rho).cwiseAbs().maxCoeff());
                }
        out.push_back(check("rho_given_R is a valid state", ok));
        out.push_back(check("appendix sigma(I/2) equals rho_given_R within 1e-10", worst <= 1e-10,
                            "max deviation " + num(worst)));
    }

    {
        const double rel =
            std::abs(wr_mean_time(1e-8, 1.0) / wr_mean_time_asymptote(1e-8, 1.0) - 1.0);
        out.push_back(check("WR <T> approaches its small-L asymptote", rel < 1e-3,
                            "relative deviation " + num(rel)));
    }

    {
        const double s = time_to_feedback_entropy(1e-6, 1.0, 1.0) / wr_mean_time(1e-6, 1.0);
        out.push_back(check("fig3 ratio at L=1e-6 >= 1.8", s >= 1.8, "s = " + num(s)));
    }

    {
        SimConfig cfg;
        cfg.n_traj = 1;
        cfg.horizon = 1.0;
        cfg.record_stride = 100;
        const auto a = simulate_trajectory(unit, RapidProtocol{}, cfg, 7);
        const auto b = simulate_trajectory(unit, RapidProtocol{}, cfg, 7);
        out.push_back(check("trajectory is reproducible for fixed (seed, id)", a.states == b.states));
    }
    return out;
}

inline std::vector<CheckResult> monte_carlo_checks(const ValidationOptions& opt)
{
    std::vector<CheckResult> out;
    SimConfig cfg;
    cfg.seed = opt.seed;
    cfg.n_traj = opt.n_traj;
    cfg.horizon = 2.0;
    cfg.record_stride = 10;

    for (double eta : {1.0, 0.8}) {
        const ModelParams p{1.0, eta, 0.0};
        const auto stats = ensemble_mean_entropy(p, FixedPhaseProtocol{0.0}, cfg, opt.threads);
        double worst = 0.0;
        for (double gt : {0.25, 0.5, 1.0, 2.0}) {
            const auto i = static_cast<std::size_t>(std::llround(gt / (cfg.dt * cfg.record_stride)));
            const double expected = mean_linear_entropy_nofeedback(gt, 1.0, eta);
            worst = std::max(worst, std::abs(stats.mean_L[i] - expected) / stats.stderr_L[i]);
        }
        out.push_back(check("quadrature <L(t)> matches Monte Carlo, eta=" + num(eta),
                            worst <= 3.0, "max |z| = " + num(worst)));
    }

    {
        const ModelParams p{1.0, 1.0, 0.0};
        const auto stats = ensemble_mean_entropy(p, RapidProtocol{}, cfg, opt.threads);
        bool ok = true;
        for (std::size_t i = 0; i < stats.time_grid.size(); ++i) {
            const double expected = feedback_linear_entropy(stats.time_grid[i], 1.0, 1.0);
            ok = ok && std::abs(stats.mean_L[i] - expected) <=
                           std::max(3.0 * stats.stderr_L[i], 5.0 * cfg.dt);
        }
        out.push_back(check("rapid protocol mean L matches the closed form", ok));
    }

    {
        const ModelParams p{1.0, 1.0, 0.0};
        const std::vector<double> targets{0.3, 0.1, 0.05};
        SimConfig fp_cfg = cfg;
        fp_cfg.horizon = 8.0;
        const auto st = mean_first_passage(p, WrReducedProtocol{}, targets, fp_cfg, opt.threads);
        double worst = 0.0;
        std::uint64_t censored = 0;
        for (const auto& s : st) {
            censored += s.censored;
            if (s.mean_T)
                worst = std::max(worst,
                                 std::abs(*s.mean_T - wr_mean_time(s.target_L, 1.0)) / s.stderr_T);
        }
        out.push_back(check("WR first passage matches the analytic <T>",
                            worst <= 3.0 && censored == 0,
                            "max |z| = " + num(worst) + ", censored " + std::to_string(censored)));
    }
    return out;
}

} // namespace detail

inline std::vector<CheckResult> run_validation(const ValidationOptions& opt)
{
    auto out = detail::quick_checks();
    if (!opt.quick) {
        auto mc = detail::monte_carlo_checks(opt);
        out.insert(out.end(), mc.begin(), mc.end());
    }
    return out;
}

} // namespace homodyne
