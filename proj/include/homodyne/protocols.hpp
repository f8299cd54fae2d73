#pragma once

// Feedback protocols and the controlled systems they induce.
//
//   rapid      local-oscillator phase chosen so the measured quadrature mean
//              vanishes; L and z then evolve deterministically.
//   fixed:<t>  constant phase (no feedback).
//   wr         unitary feedback keeping the Bloch vector on the measurement
//              axis, simulated directly as the reduced SDE for x.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "homodyne/qubit.hpp"
#include "homodyne/sde.hpp"

namespace homodyne {

struct RapidProtocol
{
    friend bool operator==(const RapidProtocol&, const RapidProtocol&) = default;
};

struct FixedPhaseProtocol
{
    double theta0 = 0.0;
    friend bool operator==(const FixedPhaseProtocol&, const FixedPhaseProtocol&) = default;
};

struct WrReducedProtocol
{
    friend bool operator==(const WrReducedProtocol&, const WrReducedProtocol&) = default;
};

using Protocol = std::variant<RapidProtocol, FixedPhaseProtocol, WrReducedProtocol>;

/// Parses "rapid", "fixed:<theta0>" or "wr".
inline Protocol parse_protocol(std::string_view text)
{
    if (text == "rapid")
        return RapidProtocol{};
    if (text == "wr")
        return WrReducedProtocol{};
    constexpr std::string_view fixed_prefix = "fixed:";
    if (text.starts_with(fixed_prefix)) {
        const std::string arg(text.substr(fixed_prefix.size()));
        std::size_t used = 0;
        double theta0 = 0.0;
        try {
            theta0 = std::stod(arg, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (arg.empty() || used != arg.size() || !std::isfinite(theta0))
            throw std::invalid_argument("protocol: malformed phase in '" + std::string(text) + "'");
        return FixedPhaseProtocol{theta0};
    }
    throw std::invalid_argument("protocol must be one of rapid, fixed:<theta0>, wr; got '" +
                                std::string(text) + "'");
}

inline std::string to_string(const Protocol& p)
{
    struct
    {
        std::string operator()(const RapidProtocol&) const { return "rapid"; }
        std::string operator()(const WrReducedProtocol&) const { return "wr"; }
        std::string operator()(const FixedPhaseProtocol& f) const
        {
            char buf[32];
            auto [end, ec] = std::to_chars(buf, buf + sizeof buf, f.theta0);
            return "fixed:" + std::string(buf, end);
        }
    } visitor;
    return std::visit(visitor, p);
}

/// theta = arg(y - i x), so that x cos(theta) + y sin(theta) = 0.
/// At x = y = 0 every phase satisfies the condition; the previous one is held.
inline double theta_rapid(const BlochState& s, double previous_theta)
{
    if (s.x == 0.0 && s.y == 0.0)
        return previous_theta;
    return std::atan2(-s.x, s.y);
}

inline double theta_fixed(double theta0) { return theta0; }

struct ScalarFields
{
    double drift = 0.0;
    double diffusion = 0.0;
};

/// dx = -(1 - eta) gamma x dt + sqrt(2 eta gamma) (1 - x^2) dW.
inline ScalarFields wr_reduced_fields(double x, const ModelParams& p)
{
    return {-(1.0 - p.eta) * p.gamma * x, std::sqrt(2.0 * p.eta * p.gamma) * (1.0 - x * x)};
}

/// Full Bloch dynamics with phase feedback (rapid) or a fixed phase.
class BlochSystem
{
  public:
    using state_type = BlochState;

    BlochSystem(const ModelParams& params, RapidProtocol) : params_(params), rapid_(true)
    {
        params_.theta = 0.0;
    }

    BlochSystem(const ModelParams& params, FixedPhaseProtocol fixed)
        : params_(params), rapid_(false)
    {
        params_.theta = theta_fixed(fixed.theta0);
    }

    [[nodiscard]] BlochState initial_state(const BlochState& s) const { return s; }

    void apply_feedback(const BlochState& s)
    {
        if (rapid_)
            params_.theta = theta_rapid(s, params_.theta);
    }

    [[nodiscard]] BlochState step(const BlochState& s, double dt, double dW, StepContext ctx) const
    {
        return euler_maruyama_step(
            s, [&](const BlochState& v) { return drift(v, params_); },
            [&](const BlochState& v) { return diffusion(v, params_); }, dt, dW,
            [](const BlochState& v) { return project_to_ball(v); }, ctx);
    }

    [[nodiscard]] double entropy(const BlochState& s) const { return linear_entropy(s); }

    [[nodiscard]] double entropy_volatility(const BlochState& s) const
    {
        return std::abs(entropy_increment(s, params_).diffusion);
    }

    [[nodiscard]] BlochState bloch(const BlochState& s) const { return s; }
    [[nodiscard]] double theta() const { return params_.theta; }

    [[nodiscard]] double record_increment(const BlochState& s, double dW, double dt) const
    {
        return homodyne::record_increment(s, params_, dW, dt);
    }

    [[nodiscard]] const ModelParams& params() const { return params_; }

  private:
    ModelParams params_;
    bool rapid_;
};

/// The Wiseman-Ralph analogue, reduced to the single coordinate x along the
/// measured quadrature (theta = 0, y = z = 0).
class WrReducedSystem
{
  public:
    using state_type = double;

    explicit WrReducedSystem(const ModelParams& params) : params_(params) { params_.theta = 0.0; }

    /// The unitary feedback rotates the initial vector onto the x axis, so only
    /// its length survives.
    [[nodiscard]] double initial_state(const BlochState& s) const { return std::min(1.0, s.norm()); }

    void apply_feedback(double) {}

    [[nodiscard]] double step(double x, double dt, double dW, StepContext ctx) const
    {
        return euler_maruyama_step(
            x, [&](double v) { return wr_reduced_fields(v, params_).drift; },
            [&](double v) { return wr_reduced_fields(v, params_).diffusion; }, dt, dW,
            [](double v) { return std::clamp(v, -1.0, 1.0); }, ctx);
    }

    [[nodiscard]] double entropy(double x) const { return 0.5 * (1.0 - x * x); }

    /// dL = -x dx - dx^2 / 2, so |dW coefficient| = |x| * diffusion(x).
    [[nodiscard]] double entropy_volatility(double x) const
    {
        return std::abs(x * wr_reduced_fields(x, params_).diffusion);
    }

    [[nodiscard]] BlochState bloch(double x) const { return {x, 0.0, 0.0}; }
    [[nodiscard]] double theta() const { return 0.0; }

    [[nodiscard]] double record_increment(double x, double dW, double dt) const
    {
        return x * dt + dW / std::sqrt(8.0 * params_.gamma);
    }

  private:
    ModelParams params_;
};

static_assert(StochasticSystem<BlochSystem>);
static_assert(StochasticSystem<WrReducedSystem>);

/// Calls `fn` with the system a protocol induces for the given parameters.
template <class Fn>
decltype(auto) with_system(const ModelParams& params, const Protocol& protocol, Fn&& fn)
{
    return std::visit(
        [&](const auto& proto) -> decltype(auto) {
            using P = std::decay_t<decltype(proto)>;
            if constexpr (std::is_same_v<P, WrReducedProtocol>)
                return fn(WrReducedSystem(params));
            else
                return fn(BlochSystem(params, proto));
        },
        protocol);
}

inline Trajectory simulate_trajectory(const ModelParams& params, const Protocol& protocol,
                                      const SimConfig& cfg, std::uint64_t trajectory_id)
{
    params.validate();
    return with_system(params, protocol, [&](auto sys) {
        return simulate_trajectory(std::move(sys), cfg, trajectory_id);
    });
}

} // namespace homodyne
