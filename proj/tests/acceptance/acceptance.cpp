// Acceptance gate. Run with a criterion number (1-9) or with no argument for
// all of them; prints one PASS/FAIL line per criterion and exits non-zero if
// any fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "homodyne/homodyne.hpp"

using namespace homodyne;

namespace {

struct Outcome
{
    bool passed;
    std::string detail;
};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

SimConfig default_scale()
{
    SimConfig cfg;  // gamma dt = 1e-3, n_traj = 5000
    cfg.seed = 20240101;
    return cfg;
}

Outcome rapid_purification()
{
    const ModelParams p{1.0, 1.0, 0.0};
    SimConfig cfg = default_scale();
    const auto st = ensemble_mean_entropy(p, RapidProtocol{}, cfg, resolve_threads());
    double worst = 0.0;
    for (std::size_t i = 0; i < st.time_grid.size(); ++i) {
        const double dev = std::abs(st.mean_L[i] - feedback_linear_entropy(st.time_grid[i], 1.0, 1.0));
        worst = std::max(worst, dev / std::max(3.0 * st.stderr_L[i], 5.0 * cfg.dt));
    }

    auto variance_at_one = [&](double dt) {
        SimConfig c = default_scale();
        c.dt = dt;
        c.horizon = 1.0;
        c.record_stride = c.n_steps();
        const auto s = ensemble_mean_entropy(p, RapidProtocol{}, c, resolve_threads());
        const double se = s.stderr_L.back();
        return se * se * static_cast<double>(c.n_traj);
    };
    const double v1 = variance_at_one(1e-3);
    const double v2 = variance_at_one(5e-4);
    const double ratio = v1 / v2;
    return {worst <= 1.0 && ratio >= 1.8,
            "max deviation / allowed = " + fmt(worst) + ", Var L(1) ratio dt/(dt/2) = " + fmt(ratio)};
}

Outcome quadrature_vs_mc(double eta)
{
    const ModelParams p{1.0, eta, 0.0};
    SimConfig cfg = default_scale();
    cfg.horizon = 2.0;
    const auto st = ensemble_mean_entropy(p, FixedPhaseProtocol{0.0}, cfg, resolve_threads());
    double worst = 0.0;
    std::string detail;
    for (double gt : {0.25, 0.5, 1.0, 2.0}) {
        const auto i = static_cast<std::size_t>(std::llround(gt / (cfg.dt * cfg.record_stride)));
        const double q = mean_linear_entropy_nofeedback(st.time_grid[i], 1.0, eta);
        const double z = (st.mean_L[i] - q) / st.stderr_L[i];
        worst = std::max(worst, std::abs(z));
        detail += " z(" + fmt(gt) + ")=" + fmt(z);
    }
    return {worst <= 3.0, "eta=" + fmt(eta) + ":" + detail};
}

Outcome quadrature_vs_mc_unit_efficiency() { return quadrature_vs_mc(1.0); }

Outcome inefficient_detection()
{
    const Outcome mc = quadrature_vs_mc(0.8);
    double worst = 0.0;
    const QubitMatrix half = QubitMatrix::Identity() / 2.0;
    for (double t : {0.1, 0.5, 2.0})
        for (double R : {-1.5, 0.4, 3.0})
            for (double eta : {0.3, 0.8, 1.0}) {
                const QubitMatrix a = appendix_sigma(half, R, t, 1.0, eta);
                const QubitMatrix b = rho_given_r(t, R, 1.0, eta);
                worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
            }
    return {mc.passed && worst <= 1e-10, mc.detail + "; max |sigma - rho| = " + fmt(worst)};
}

Outcome wr_analytic_law()
{
    const ModelParams p{1.0, 1.0, 0.0};
    const SimConfig cfg = default_scale();
    const auto st = mean_first_passage(p, WrReducedProtocol{}, {0.3, 0.1, 0.05}, cfg,
                                       resolve_threads());
    bool ok = true;
    std::string detail;
    for (const auto& s : st) {
        if (!s.mean_T || s.censored != 0) {
            ok = false;
            detail += " L=" + fmt(s.target_L) + " censored=" + std::to_string(s.censored);
            continue;
        }
        const double z = (*s.mean_T - wr_mean_time(s.target_L, 1.0)) / s.stderr_T;
        ok = ok && std::abs(z) <= 3.0;
        detail += " z(" + fmt(s.target_L) + ")=" + fmt(z);
    }
    return {ok, detail.substr(1)};
}

Outcome fig3_limit()
{
    const auto grid = log_grid_descending(1e-8, 0.49, 60);
    const auto c = speedup_fig3({1.0, 1.0, 0.0}, grid, default_scale());
    bool monotone = true;
    for (std::size_t i = 1; i < c.s.size(); ++i)
        monotone = monotone && c.s[i] > c.s[i - 1];
    const double s_end = c.s.back();
    const bool near_two = std::abs(s_end - 2.0) <= 1e-2;
    return {monotone && near_two,
            std::string("monotone=") + (monotone ? "yes" : "no") + ", s(1e-8) = " + fmt(s_end) +
                " (|s-2| = " + fmt(std::abs(s_end - 2.0)) +
                ", the ratio tends to 2 only logarithmically; a limit of 1/2 is not reproduced)"};
}

Outcome fig1_shape()
{
    const auto grid = default_l_grid();
    std::vector<SpeedupCurve> curves;
    bool ok = true;
    std::string detail;
    for (double eta : {1.0, 0.8, 0.5}) {
        curves.push_back(speedup_fig1({1.0, eta, 0.0}, grid));
        const auto& s = curves.back().s;
        if (curves.back().has_failures()) {
            ok = false;
            detail += " eta=" + fmt(eta) + " root failures;";
            continue;
        }
        const auto peak_it = std::max_element(s.begin(), s.end());
        const auto peak = static_cast<std::size_t>(peak_it - s.begin());
        int local_max = 0;
        for (std::size_t i = 1; i + 1 < s.size(); ++i)
            local_max += (s[i] > s[i - 1] && s[i] > s[i + 1]) ? 1 : 0;
        const double excess = *peak_it - 1.0;
        const bool interior = peak > 0 && peak + 1 < s.size();
        const bool ends = s.front() - 1.0 <= 0.5 * excess && s.back() - 1.0 <= 0.5 * excess;
        ok = ok && excess > 0.0 && interior && local_max == 1 && ends;
        detail += " eta=" + fmt(eta) + ": peak " + fmt(*peak_it) + " at L=" + fmt(grid[peak]) +
                  ", ends " + fmt(s.front()) + "/" + fmt(s.back()) +
                  ", local maxima " + std::to_string(local_max) + ";";
    }
    if (ok) {
        const auto& s1 = curves[0].s;
        const auto at = static_cast<std::size_t>(std::max_element(s1.begin(), s1.end()) - s1.begin());
        const bool ordered = curves[0].s[at] >= curves[1].s[at] && curves[1].s[at] >= curves[2].s[at];
        ok = ordered;
        detail += std::string(" ordered at eta=1 peak: ") + (ordered ? "yes" : "no");
    }
    return {ok, detail.substr(1)};
}

Outcome fig2_shape()
{
    SimConfig cfg = default_scale();
    cfg.horizon = 16.0;
    const auto grid = default_l_grid();
    const auto c = speedup_fig2({1.0, 1.0, 0.0}, grid, cfg, resolve_threads());
    const auto& se = *c.stderr_s;
    std::size_t censored = 0;
    for (auto n : c.censored)
        censored += n;
    std::size_t best = 0;
    for (std::size_t i = 1; i + 1 < c.size(); ++i)
        if ((c.s[i] - 1.0) / se[i] > (c.s[best] - 1.0) / se[best])
            best = i;
    const bool exceeds = best > 0 && c.s[best] - 3.0 * se[best] > 1.0;
    const std::size_t last = c.size() - 1;
    const double z_end = (c.s[last] - 1.0) / se[last];
    const bool vanishes = std::abs(z_end) <= 3.0;
    return {exceeds && vanishes && censored == 0,
            "max s = " + fmt(c.s[best]) + " +- " + fmt(se[best]) + " at L=" + fmt(grid[best]) +
                "; s(" + fmt(grid[last]) + ") = " + fmt(c.s[last]) + " +- " + fmt(se[last]) +
                " (z = " + fmt(z_end) + "); censored " + std::to_string(censored)};
}

Outcome normalization_suite()
{
    double mass_dev = 0.0;
    for (double gt : {0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 8.0})
        for (double eta : {0.1, 0.3, 0.5, 0.8, 0.95, 1.0}) {
            const RDensity p(gt, 1.0, eta);
            const double sd = std::sqrt(p.reference_variance());
            const double mass =
                integrate_adaptive([&](double r) { return p(r); }, -14 * sd, 14 * sd, 1e-10);
            mass_dev = std::max(mass_dev, std::abs(mass - 1.0));
        }
    bool states_ok = true;
    for (double gt : {0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 8.0})
        for (double R : {-5.0, -1.0, -0.1, 0.0, 0.3, 1.0, 2.5, 8.0})
            for (double eta : {0.0, 0.3, 0.5, 0.8, 1.0}) {
                const QubitMatrix rho = rho_given_r(gt, R, 1.0, eta);
                states_ok = states_ok && std::abs(rho.trace().real() - 1.0) <= 1e-12 &&
                            is_valid_state(rho, 1e-12);
            }
    double round_trip = 0.0;
    for (double eta : {0.0, 0.3, 0.5, 0.8, 0.95, 1.0})
        for (double gt = 1e-3; gt <= 12.0; gt *= 1.25) {
            const double back = time_to_feedback_entropy(feedback_linear_entropy(gt, 1.0, eta), 1.0, eta);
            round_trip = std::max(round_trip, std::abs(back - gt) / gt);
        }
    return {mass_dev <= 1e-8 && states_ok && round_trip <= 1e-10,
            "max |int P - 1| = " + fmt(mass_dev) + ", states valid: " + (states_ok ? "yes" : "no") +
                ", round trip rel err = " + fmt(round_trip)};
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome reproducibility()
{
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "homodyne_acceptance_c9";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string exe = HOMODYNE_CLI_PATH;
    const std::vector<std::string> jobs{
        "mean-entropy --protocol fixed:0 --eta 0.8 --horizon 2 --seed 5",
        "first-passage --protocol wr --eta 0.95 --targets 0.3,0.1,0.05 --seed 5",
        "fig2 --eta 1 --l-grid 0.4,0.2,0.1,0.05 --horizon 6 --n-traj 2000 --seed 5",
    };
    bool ok = true;
    std::string detail;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        std::vector<std::string> bodies;
        for (const char* threads : {"1", "8", "1"}) {
            const fs::path out = dir / ("job" + std::to_string(j) + "_" + std::to_string(bodies.size()) + ".csv");
            const std::string cmd = "\"" + exe + "\" " + jobs[j] + " --threads " + threads +
                                    " --out \"" + out.string() + "\" > /dev/null 2>&1";
            if (std::system(cmd.c_str()) != 0) {
                ok = false;
                detail += " job " + std::to_string(j) + " exited non-zero;";
            }
            bodies.push_back(slurp(out));
        }
        const bool same = !bodies[0].empty() && bodies[0] == bodies[1] && bodies[0] == bodies[2];
        ok = ok && same;
        detail += " " + jobs[j].substr(0, jobs[j].find(' ')) + (same ? " identical;" : " DIFFERS;");
    }
    fs::remove_all(dir);
    return {ok, detail.substr(1)};
}

struct Criterion
{
    int id;
    const char* name;
    std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria()
{
    static const std::vector<Criterion> all{
        {1, "deterministic rapid purification", rapid_purification},
        {2, "quadrature vs Monte Carlo, eta=1", quadrature_vs_mc_unit_efficiency},
        {3, "inefficient detection solution, eta=0.8", inefficient_detection},
        {4, "WR analytic mean passage time", wr_analytic_law},
        {5, "fig3 closed-form limit", fig3_limit},
        {6, "fig1 shape", fig1_shape},
        {7, "fig2 shape", fig2_shape},
        {8, "normalization and validity", normalization_suite},
        {9, "reproducibility across runs and threads", reproducibility},
    };
    return all;
}

} // namespace

int main(int argc, char** argv)
{
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i)
        wanted.push_back(std::atoi(argv[i]));
    if (wanted.empty())
        for (const auto& c : criteria())
            wanted.push_back(c.id);

    int failures = 0;
    for (int id : wanted) {
        const auto it = std::find_if(criteria().begin(), criteria().end(),
                                     [id](const Criterion& c) { return c.id == id; });
        if (it == criteria().end()) {
            std::cerr << "unknown criterion " << id << '\n';
            return 2;
        }
        Outcome o;
        try {
            o = it->run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << it->id << " (" << it->name
                  << "): " << o.detail << std::endl;
        failures += o.passed ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
