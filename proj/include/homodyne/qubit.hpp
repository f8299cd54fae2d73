#pragma once

// Single optical qubit under homodyne detection, in the Bloch representation.
//
// rho = (I + x sx + y sy + z sz) / 2 with z = +1 the one-photon (excited) state
// and z = -1 the vacuum. The detected channel is c = sqrt(2 eta gamma) |g><e|,
// which gives
//
//   dx = -gamma x dt + sqrt(2 eta gamma) [(1+z) cos(theta) - x q] dW
//   dy = -gamma y dt + sqrt(2 eta gamma) [(1+z) sin(theta) - y q] dW
//   dz = -2 gamma (1+z) dt - sqrt(2 eta gamma) (1+z) q dW
//
// where q = x cos(theta) + y sin(theta) is the mean of the measured quadrature.
// These three equations are the ground truth for everything in this library.

#include <cmath>
#include <stdexcept>

namespace homodyne {

struct BlochState
{
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    [[nodiscard]] double norm_squared() const { return x * x + y * y + z * z; }
    [[nodiscard]] double norm() const { return std::sqrt(norm_squared()); }

    friend bool operator==(const BlochState&, const BlochState&) = default;

    static constexpr BlochState maximally_mixed() { return {0.0, 0.0, 0.0}; }
    static constexpr BlochState ground() { return {0.0, 0.0, -1.0}; }
};

/// Drift or diffusion coefficients of the three Bloch components.
struct BlochVelocity
{
    double dx = 0.0;
    double dy = 0.0;
    double dz = 0.0;

    friend bool operator==(const BlochVelocity&, const BlochVelocity&) = default;
};

/// Decay rate, detector efficiency and the local-oscillator phase currently applied.
struct ModelParams
{
    double gamma = 1.0;
    double eta = 1.0;
    double theta = 0.0;

    void validate() const
    {
        if (!(gamma > 0.0) || !std::isfinite(gamma))
            throw std::invalid_argument("gamma must be > 0");
        if (!(eta >= 0.0 && eta <= 1.0))
            throw std::invalid_argument("eta must be in [0,1]");
    }

    [[nodiscard]] ModelParams with_theta(double th) const
    {
        ModelParams p = *this;
        p.theta = th;
        return p;
    }
};

inline constexpr double default_ball_tolerance = 1e-9;

/// Mean of the measured quadrature, x cos(theta) + y sin(theta).
inline double quadrature_mean(const BlochState& s, double theta)
{
    return s.x * std::cos(theta) + s.y * std::sin(theta);
}

inline bool in_ball(const BlochState& s, double tol = default_ball_tolerance)
{
    return s.norm_squared() <= 1.0 + tol;
}

/// Rescales a vector outside the unit ball back onto the sphere, keeping its direction.
inline BlochState project_to_ball(BlochState s)
{
    const double n2 = s.norm_squared();
    if (n2 > 1.0) {
        const double inv = 1.0 / std::sqrt(n2);
        s.x *= inv;
        s.y *= inv;
        s.z *= inv;
    }
    return s;
}

inline BlochVelocity drift(const BlochState& s, const ModelParams& p)
{
    return {-p.gamma * s.x, -p.gamma * s.y, -2.0 * p.gamma * (1.0 + s.z)};
}

inline BlochVelocity diffusion(const BlochState& s, const ModelParams& p)
{
    const double c = std::cos(p.theta);
    const double sn = std::sin(p.theta);
    const double q = s.x * c + s.y * sn;
    const double amp = std::sqrt(2.0 * p.eta * p.gamma);
    const double excited = 1.0 + s.z;
    return {amp * (excited * c - s.x * q),
            amp * (excited * sn - s.y * q),
            -amp * excited * q};
}

/// L = 1 - Tr[rho^2] = (1 - |a|^2) / 2. Zero for pure states, 1/2 at I/2.
inline double linear_entropy(const BlochState& s)
{
    return 0.5 * (1.0 - s.norm_squared());
}

struct EntropyIncrement
{
    double drift = 0.0;
    double diffusion = 0.0;
};

/// Ito drift and dW coefficient of L implied by the Bloch equations above.
///
/// drift = -gamma { 2L [1 - eta q^2] + (eta - 1)(1+z)^2 },
/// diffusion = -sqrt(8 eta gamma) L q.
///
/// Both vanish in their q-dependent parts when q = 0, which is what the
/// rapid-purification feedback enforces.
inline EntropyIncrement entropy_increment(const BlochState& s, const ModelParams& p)
{
    const double L = linear_entropy(s);
    const double q = quadrature_mean(s, p.theta);
    const double excited = 1.0 + s.z;
    return {-p.gamma * (2.0 * L * (1.0 - p.eta * q * q) + (p.eta - 1.0) * excited * excited),
            -std::sqrt(8.0 * p.eta * p.gamma) * L * q};
}

/// Measurement-record increment dr = q dt + dW / sqrt(8 gamma).
inline double record_increment(const BlochState& s, const ModelParams& p, double dW, double dt)
{
    return quadrature_mean(s, p.theta) * dt + dW / std::sqrt(8.0 * p.gamma);
}

} // namespace homodyne
