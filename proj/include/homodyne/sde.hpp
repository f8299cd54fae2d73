#pragma once

// Euler-Maruyama integration with keyed noise, per-step feedback and online
// first-passage detection.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "homodyne/qubit.hpp"
#include "homodyne/random.hpp"

namespace homodyne {

struct SimConfig
{
    double dt = 1e-3;
    double horizon = 8.0;
    std::uint64_t n_traj = 5000;
    std::uint64_t seed = 0;
    std::uint64_t record_stride = 10;
    BlochState initial = BlochState::maximally_mixed();

    /// Defaults scaled to a decay rate: gamma*dt = 1e-3, gamma*horizon = 8.
    static SimConfig for_gamma(double gamma)
    {
        SimConfig c;
        c.dt = 1e-3 / gamma;
        c.horizon = 8.0 / gamma;
        return c;
    }

    [[nodiscard]] std::uint64_t n_steps() const
    {
        return static_cast<std::uint64_t>(std::llround(horizon / dt));
    }

    /// Throws std::invalid_argument on a hard violation; returns a warning
    /// message when gamma*dt is above the recommended 1e-3.
    [[nodiscard]] std::optional<std::string> validate(double gamma) const
    {
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw std::invalid_argument("dt must be > 0");
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw std::invalid_argument("horizon must be > 0");
        if (dt > horizon)
            throw std::invalid_argument("dt must not exceed horizon");
        if (n_traj == 0)
            throw std::invalid_argument("n_traj must be positive");
        if (n_traj > 0xFFFFFFFFull)
            throw std::invalid_argument("n_traj must fit in 32 bits");
        if (record_stride == 0)
            throw std::invalid_argument("record_stride must be positive");
        if (!in_ball(initial))
            throw std::invalid_argument("initial state must lie in the Bloch ball");
        if (gamma * dt > 1e-2)
            throw std::invalid_argument("gamma*dt must be <= 0.01");
        if (gamma * dt > 1e-3)
            return "gamma*dt = " + std::to_string(gamma * dt) + " exceeds the recommended 1e-3";
        return std::nullopt;
    }
};

class IntegrationFault : public std::runtime_error
{
  public:
    IntegrationFault(std::uint64_t trajectory_id, std::uint64_t step)
        : std::runtime_error("non-finite state in trajectory " + std::to_string(trajectory_id) +
                             " at step " + std::to_string(step)),
          trajectory_id_(trajectory_id), step_(step)
    {
    }

    [[nodiscard]] std::uint64_t trajectory_id() const { return trajectory_id_; }
    [[nodiscard]] std::uint64_t step() const { return step_; }

  private:
    std::uint64_t trajectory_id_;
    std::uint64_t step_;
};

struct StepContext
{
    std::uint64_t trajectory_id = 0;
    std::uint64_t step = 0;
};

namespace detail {

inline bool is_finite(double v) { return std::isfinite(v); }
inline bool is_finite(const BlochState& s)
{
    return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.z);
}

inline double em_update(double s, double a, double b, double dt, double dW)
{
    return s + a * dt + b * dW;
}

inline BlochState em_update(const BlochState& s, const BlochVelocity& a, const BlochVelocity& b,
                            double dt, double dW)
{
    return {s.x + a.dx * dt + b.dx * dW, s.y + a.dy * dt + b.dy * dW,
            s.z + a.dz * dt + b.dz * dW};
}

struct no_projection
{
    template <class S>
    S operator()(const S& s) const
    {
        return s;
    }
};

} // namespace detail

/// state + drift*dt + diffusion*dW, followed by the model's domain projection.
template <class State, class DriftFn, class DiffusionFn, class Projection = detail::no_projection>
State euler_maruyama_step(const State& state, DriftFn&& drift_fn, DiffusionFn&& diffusion_fn,
                          double dt, double dW, Projection&& project = {}, StepContext ctx = {})
{
    if (!(dt > 0.0))
        throw std::invalid_argument("dt must be > 0");
    State next = project(detail::em_update(state, drift_fn(state), diffusion_fn(state), dt, dW));
    if (!detail::is_finite(next))
        throw IntegrationFault(ctx.trajectory_id, ctx.step);
    return next;
}

/// A controlled SDE the engine can drive.
///
/// `apply_feedback` is the per-step protocol hook, called with the pre-step
/// state. `entropy_volatility` is |dW coefficient of L| under the current
/// control, used for the bridge crossing test.
template <class S>
concept StochasticSystem = requires(S sys, const S csys, const typename S::state_type& st,
                                    double dt, double dW, StepContext ctx) {
    typename S::state_type;
    { csys.initial_state(BlochState{}) } -> std::same_as<typename S::state_type>;
    sys.apply_feedback(st);
    { csys.step(st, dt, dW, ctx) } -> std::same_as<typename S::state_type>;
    { csys.entropy(st) } -> std::convertible_to<double>;
    { csys.entropy_volatility(st) } -> std::convertible_to<double>;
    { csys.bloch(st) } -> std::same_as<BlochState>;
    { csys.theta() } -> std::convertible_to<double>;
    { csys.record_increment(st, dW, dt) } -> std::convertible_to<double>;
};

/// Everything an observer sees after one integration step.
struct StepEvent
{
    std::uint64_t step;   // index of the post-step sample
    double t_prev;
    double t;
    double dt;
    double entropy_prev;
    double entropy;
    double entropy_volatility_prev;
    double theta;         // phase applied during the step
    double record;        // dr over the step
    const NoiseStream* noise;
};

/// Runs one trajectory. `on_start(state, L0)` is called once; `on_step(event,
/// state)` after every step and returns false to stop early.
template <StochasticSystem System, class OnStart, class OnStep>
void run_trajectory(System& sys, const SimConfig& cfg, std::uint64_t trajectory_id,
                    OnStart&& on_start, OnStep&& on_step)
{
    const NoiseStream noise(cfg.seed, trajectory_id);
    const std::uint64_t n = cfg.n_steps();
    const double sqrt_dt = std::sqrt(cfg.dt);

    auto state = sys.initial_state(cfg.initial);
    double L = sys.entropy(state);
    on_start(state, L);
    for (std::uint64_t k = 0; k < n; ++k) {
        sys.apply_feedback(state);
        const double sigma = sys.entropy_volatility(state);
        const double dW = sqrt_dt * noise.gaussian_at(k);
        const double dr = sys.record_increment(state, dW, cfg.dt);
        auto next = sys.step(state, cfg.dt, dW, StepContext{trajectory_id, k + 1});
        const double L_next = sys.entropy(next);
        const StepEvent ev{k + 1, static_cast<double>(k) * cfg.dt,
                           static_cast<double>(k + 1) * cfg.dt, cfg.dt, L, L_next, sigma,
                           sys.theta(), dr, &noise};
        state = next;
        L = L_next;
        if (!on_step(ev, state))
            break;
    }
}

struct Trajectory
{
    std::vector<double> times;
    std::vector<BlochState> states;
    std::vector<double> thetas;  // phase applied over the interval ending at each sample
    std::vector<double> record;  // accumulated dr over the interval ending at each sample

    [[nodiscard]] std::size_t size() const { return times.size(); }
};

/// Records every `record_stride`-th step (and t = 0) from 0 to the horizon.
template <StochasticSystem System>
Trajectory simulate_trajectory(System sys, const SimConfig& cfg, std::uint64_t trajectory_id)
{
    Trajectory tr;
    const std::size_t expected = cfg.n_steps() / cfg.record_stride + 1;
    tr.times.reserve(expected);
    tr.states.reserve(expected);
    tr.thetas.reserve(expected);
    tr.record.reserve(expected);
    double dr_acc = 0.0;
    run_trajectory(
        sys, cfg, trajectory_id,
        [&](const auto& s, double) {
            tr.times.push_back(0.0);
            tr.states.push_back(sys.bloch(s));
            tr.thetas.push_back(sys.theta());
            tr.record.push_back(0.0);
        },
        [&](const StepEvent& ev, const auto& s) {
            dr_acc += ev.record;
            if (ev.step % cfg.record_stride == 0) {
                tr.times.push_back(ev.t);
                tr.states.push_back(sys.bloch(s));
                tr.thetas.push_back(ev.theta);
                tr.record.push_back(dr_acc);
                dr_acc = 0.0;
            }
            return true;
        });
    return tr;
}

struct FirstPassage
{
    double target_L = 0.0;
    std::optional<double> time;  // nullopt: censored at the horizon
    std::uint64_t trajectory_id = 0;

    [[nodiscard]] bool censored() const { return !time.has_value(); }
};

inline void check_target(double target_L)
{
    if (!(target_L > 0.0 && target_L <= 0.5))
        throw std::invalid_argument("target L must lie in (0, 1/2]");
}

/// First time L(t) <= target on a recorded trajectory, linearly interpolated
/// in L between the bracketing samples.
inline FirstPassage first_passage_time(const Trajectory& tr, double target_L,
                                       std::uint64_t trajectory_id = 0)
{
    check_target(target_L);
    FirstPassage fp{target_L, std::nullopt, trajectory_id};
    if (tr.size() == 0)
        return fp;
    double L_prev = linear_entropy(tr.states[0]);
    if (L_prev <= target_L) {
        fp.time = tr.times[0];
        return fp;
    }
    for (std::size_t i = 1; i < tr.size(); ++i) {
        const double L = linear_entropy(tr.states[i]);
        if (L <= target_L) {
            const double frac = (L_prev - target_L) / (L_prev - L);
            fp.time = tr.times[i - 1] + frac * (tr.times[i] - tr.times[i - 1]);
            return fp;
        }
        L_prev = L;
    }
    return fp;
}

/// Online first-passage detection for several targets at once.
///
/// A step that ends below a target is resolved by linear interpolation in L.
/// A step that ends above it may still have crossed inside the step; with the
/// bridge correction enabled this is decided by comparing the Brownian-bridge
/// crossing probability exp(-2 (L0 - L*)(L1 - L*) / (sigma^2 dt)) against a
/// keyed uniform, and the crossing is placed at the step midpoint. Targets
/// share the uniform, so passage times stay ordered in the target.
class FirstPassageDetector
{
  public:
    FirstPassageDetector(std::vector<double> targets, std::uint64_t trajectory_id,
                         bool bridge_correction = true)
        : bridge_(bridge_correction)
    {
        order_.resize(targets.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::stable_sort(order_.begin(), order_.end(),
                         [&](std::size_t a, std::size_t b) { return targets[a] > targets[b]; });
        results_.reserve(targets.size());
        for (double t : targets) {
            check_target(t);
            results_.push_back({t, std::nullopt, trajectory_id});
        }
    }

    void start(double L0)
    {
        while (next_ < order_.size() && L0 <= results_[order_[next_]].target_L)
            results_[order_[next_++]].time = 0.0;
    }

    /// Returns true while some target is still unreached.
    bool observe(const StepEvent& ev)
    {
        double u = -1.0;
        while (next_ < order_.size()) {
            FirstPassage& fp = results_[order_[next_]];
            const double target = fp.target_L;
            if (ev.entropy <= target) {
                const double frac = (ev.entropy_prev - target) / (ev.entropy_prev - ev.entropy);
                fp.time = ev.t_prev + frac * ev.dt;
            } else if (bridge_ && ev.entropy_volatility_prev > 0.0) {
                const double s2dt = ev.entropy_volatility_prev * ev.entropy_volatility_prev * ev.dt;
                const double p =
                    std::exp(-2.0 * (ev.entropy_prev - target) * (ev.entropy - target) / s2dt);
                if (u < 0.0)
                    u = ev.noise->uniform_at(ev.step - 1, NoiseChannel::bridge);
                if (u >= p)
                    break;
                fp.time = ev.t_prev + 0.5 * ev.dt;
            } else {
                break;
            }
            ++next_;
        }
        return next_ < order_.size();
    }

    [[nodiscard]] bool done() const { return next_ == order_.size(); }
    [[nodiscard]] const std::vector<FirstPassage>& results() const { return results_; }

  private:
    bool bridge_;
    std::vector<std::size_t> order_;
    std::vector<FirstPassage> results_;
    std::size_t next_ = 0;
};

/// Runs a trajectory until every target is reached or the horizon is hit.
template <StochasticSystem System>
std::vector<FirstPassage> first_passage_times(System sys, const SimConfig& cfg,
                                              std::uint64_t trajectory_id,
                                              const std::vector<double>& targets,
                                              bool bridge_correction = true)
{
    FirstPassageDetector det(targets, trajectory_id, bridge_correction);
    bool pending = true;
    run_trajectory(
        sys, cfg, trajectory_id,
        [&](const auto&, double L0) {
            det.start(L0);
            pending = !det.done();
        },
        [&](const StepEvent& ev, const auto&) { return pending && det.observe(ev); });
    return det.results();
}

} // namespace homodyne
