#pragma once

// Speed-up curves: ratios of the times two protocols need to reach a target
// linear entropy.
//
//   fig1: t_m / t_fb, with t_m solving <L(t_m)> = L without feedback.
//   fig2: T_fb / <T_nofb>, mean first-passage time without feedback (MC).
//   fig3: T_fb / <T_wr>, closed form at eta = 1, MC on the reduced SDE otherwise.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "homodyne/analytic.hpp"
#include "homodyne/ensemble.hpp"
#include "homodyne/protocols.hpp"

namespace homodyne {

struct SpeedupCurve
{
    double eta = 1.0;
    std::string numerator;    // what t_numerator holds
    std::string denominator;  // what t_denominator holds
    std::vector<double> L;    // strictly decreasing
    std::vector<double> t_numerator;
    std::vector<double> t_denominator;
    std::vector<double> s;
    std::optional<std::vector<double>> stderr_s;  // only for Monte-Carlo curves
    std::vector<std::uint64_t> censored;
    std::vector<std::string> failures;  // per grid point, empty when fine

    [[nodiscard]] std::size_t size() const { return L.size(); }
    [[nodiscard]] bool has_failures() const
    {
        for (const auto& f : failures)
            if (!f.empty())
                return true;
        return false;
    }
};

/// `points` log-spaced values from `hi` down to `lo`.
inline std::vector<double> log_grid_descending(double lo, double hi, std::size_t points)
{
    if (!(lo > 0.0 && hi > lo) || points < 2)
        throw std::invalid_argument("log grid needs 0 < lo < hi and at least two points");
    std::vector<double> g(points);
    const double a = std::log(hi);
    const double b = std::log(lo);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    g.front() = hi;
    g.back() = lo;
    return g;
}

/// 40 points, log-spaced over [1e-4, 0.49].
inline std::vector<double> default_l_grid() { return log_grid_descending(1e-4, 0.49, 40); }

inline void check_l_grid(const std::vector<double>& grid)
{
    if (grid.empty())
        throw std::invalid_argument("L grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0 && grid[i] < 0.5))
            throw std::invalid_argument("L grid values must lie in (0, 1/2)");
        if (i > 0 && !(grid[i] < grid[i - 1]))
            throw std::invalid_argument("L grid must be strictly decreasing");
    }
}

/// Verifies <L(t)> decreases on a gamma*t grid over [0, 20].
inline void check_nofeedback_monotone(double gamma, double eta)
{
    double prev = mean_linear_entropy_nofeedback(0.0, gamma, eta);
    for (int i = 1; i <= 80; ++i) {
        const double cur = mean_linear_entropy_nofeedback(0.25 * i / gamma, gamma, eta);
        if (!(cur < prev))
            throw std::runtime_error("<L(t)> is not monotone on the evaluation grid");
        prev = cur;
    }
}

/// Time at which the no-feedback ensemble reaches <L> = L, by bisection over
/// gamma*t in [0, 20] to 1e-9 in t.
inline double time_to_mean_entropy_nofeedback(double L, double gamma, double eta,
                                              double t_tol = 1e-9)
{
    if (!(L > 0.0 && L <= 0.5))
        throw std::domain_error("L must lie in (0, 1/2]");
    double lo = 0.0;
    double hi = 20.0 / gamma;
    auto f = [&](double t) { return mean_linear_entropy_nofeedback(t, gamma, eta) - L; };
    if (f(lo) <= 0.0)
        return 0.0;
    if (f(hi) > 0.0)
        throw std::runtime_error("target L not reached within gamma*t = 20");
    while (hi - lo > t_tol) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline SpeedupCurve speedup_fig1(const ModelParams& params, const std::vector<double>& L_grid)
{
    params.validate();
    if (!(params.eta > 0.0))
        throw std::invalid_argument("fig1 needs eta > 0");
    check_l_grid(L_grid);
    check_nofeedback_monotone(params.gamma, params.eta);

    SpeedupCurve c;
    c.eta = params.eta;
    c.numerator = "t_m (no feedback, <L> reaches L)";
    c.denominator = "t_fb (rapid feedback)";
    c.L = L_grid;
    c.censored.assign(L_grid.size(), 0);
    for (double L : L_grid) {
        std::string failure;
        double t_m = std::nan("");
        try {
            t_m = time_to_mean_entropy_nofeedback(L, params.gamma, params.eta);
        } catch (const std::exception& e) {
            failure = e.what();
        }
        const double t_fb = time_to_feedback_entropy(L, params.gamma, params.eta);
        c.t_numerator.push_back(t_m);
        c.t_denominator.push_back(t_fb);
        c.s.push_back(t_m / t_fb);
        c.failures.push_back(failure);
    }
    return c;
}

namespace detail {

inline SpeedupCurve mc_speedup(const ModelParams& params, const Protocol& protocol,
                               const std::vector<double>& L_grid, const SimConfig& cfg,
                               unsigned threads, std::string denominator)
{
    const auto stats = mean_first_passage(params, protocol, L_grid, cfg, threads);
    SpeedupCurve c;
    c.eta = params.eta;
    c.numerator = "T_fb (rapid feedback, closed form)";
    c.denominator = std::move(denominator);
    c.L = L_grid;
    c.stderr_s.emplace();
    for (const auto& st : stats) {
        const double t_fb = time_to_feedback_entropy(st.target_L, params.gamma, params.eta);
        c.t_numerator.push_back(t_fb);
        c.censored.push_back(st.censored);
        if (st.all_censored()) {
            c.t_denominator.push_back(std::nan(""));
            c.s.push_back(std::nan(""));
            c.stderr_s->push_back(std::nan(""));
            c.failures.push_back("all samples censored");
            continue;
        }
        const double mean = *st.mean_T;
        c.t_denominator.push_back(mean);
        c.s.push_back(t_fb / mean);
        // delta method: ds = T_fb / <T>^2 * d<T>
        c.stderr_s->push_back(t_fb * st.stderr_T / (mean * mean));
        c.failures.push_back(st.censored > 0
                                 ? std::to_string(st.censored) + " censored samples"
                                 : std::string{});
    }
    return c;
}

} // namespace detail

inline SpeedupCurve speedup_fig2(const ModelParams& params, const std::vector<double>& L_grid,
                                 const SimConfig& cfg, unsigned threads = 1)
{
    params.validate();
    check_l_grid(L_grid);
    return detail::mc_speedup(params, FixedPhaseProtocol{0.0}, L_grid, cfg, threads,
                              "<T> no feedback (Monte Carlo)");
}

inline SpeedupCurve speedup_fig3(const ModelParams& params, const std::vector<double>& L_grid,
                                 const SimConfig& cfg, unsigned threads = 1)
{
    params.validate();
    check_l_grid(L_grid);
    if (params.eta < 1.0)
        return detail::mc_speedup(params, WrReducedProtocol{}, L_grid, cfg, threads,
                                  "<T> WR analogue (Monte Carlo)");
    SpeedupCurve c;
    c.eta = 1.0;
    c.numerator = "T_fb (rapid feedback, closed form)";
    c.denominator = "<T> WR analogue (closed form)";
    c.L = L_grid;
    c.censored.assign(L_grid.size(), 0);
    c.failures.assign(L_grid.size(), {});
    for (double L : L_grid) {
        const double t_fb = time_to_feedback_entropy(L, params.gamma, 1.0);
        const double t_wr = wr_mean_time(L, params.gamma);
        c.t_numerator.push_back(t_fb);
        c.t_denominator.push_back(t_wr);
        c.s.push_back(t_fb / t_wr);
    }
    return c;
}

} // namespace homodyne
