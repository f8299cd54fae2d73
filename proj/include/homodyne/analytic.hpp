#pragma once

// Closed-form results for the homodyned qubit.
//
// Matrices use the basis {|e>, |g>} (index 0 = one photon, index 1 = vacuum),
// so sigma_minus = |g><e| is [[0, 0], [1, 0]] and z = rho_ee - rho_gg.
//
// The no-feedback ensemble is solved with linear quantum trajectories. For
// detection efficiency eta the unobserved fraction of the output field is a
// second, averaged-over measurement; on the qubit the evolution operator is
//
//   V(t, R, Q) = exp(-gamma |e><e| t) (1 + (R + Q) sigma_minus),
//
// with R ~ N(0, eta kappa) and Q ~ N(0, (1 - eta) kappa) under the reference
// measure and kappa = 1 - exp(-2 gamma t).

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <stdexcept>

#include <Eigen/Dense>

#include "homodyne/qubit.hpp"
#include "homodyne/quadrature.hpp"

namespace homodyne {

using QubitMatrix = Eigen::Matrix2cd;

inline QubitMatrix sigma_minus()
{
    QubitMatrix m = QubitMatrix::Zero();
    m(1, 0) = 1.0;
    return m;
}

inline QubitMatrix density_from_bloch(const BlochState& s)
{
    using namespace std::complex_literals;
    QubitMatrix m;
    m(0, 0) = 0.5 * (1.0 + s.z);
    m(1, 1) = 0.5 * (1.0 - s.z);
    m(0, 1) = 0.5 * (s.x - 1i * s.y);
    m(1, 0) = 0.5 * (s.x + 1i * s.y);
    return m;
}

inline BlochState bloch_from_density(const QubitMatrix& m)
{
    return {2.0 * m(0, 1).real(), -2.0 * m(0, 1).imag(), (m(0, 0) - m(1, 1)).real()};
}

/// 1 - Tr[rho^2] for a unit-trace qubit state, evaluated as 2 det(rho) / Tr(rho)^2
/// so that nearly pure states keep their relative precision.
inline double linear_entropy(const QubitMatrix& m)
{
    const double tr = m.trace().real();
    const double det = m(0, 0).real() * m(1, 1).real() - std::norm(m(0, 1));
    return 2.0 * det / (tr * tr);
}

/// Eigenvalues of the Hermitian part, ascending.
inline std::pair<double, double> hermitian_eigenvalues(const QubitMatrix& m)
{
    const double a = m(0, 0).real();
    const double d = m(1, 1).real();
    const std::complex<double> b = 0.5 * (m(0, 1) + std::conj(m(1, 0)));
    const double mid = 0.5 * (a + d);
    const double rad = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(b));
    return {mid - rad, mid + rad};
}

/// Hermitian, unit trace and positive semidefinite within `tol`.
inline bool is_valid_state(const QubitMatrix& m, double tol = 1e-12)
{
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol)
        return false;
    if (std::abs(m.trace() - 1.0) > tol)
        return false;
    return hermitian_eigenvalues(m).first >= -tol;
}

inline double kappa(double t, double gamma) { return -std::expm1(-2.0 * gamma * t); }

// --- deterministic feedback evolution -------------------------------------

/// z(t) = exp(-2 gamma t) - 1 under the rapid protocol from I/2.
inline double z_deterministic(double t, double gamma)
{
    if (t < 0.0)
        throw std::domain_error("t must be >= 0");
    return std::expm1(-2.0 * gamma * t);
}

/// L_fb(t) = u [1/2 + (1 - eta)(1 - u)/2] with u = exp(-2 gamma t).
inline double feedback_linear_entropy(double t, double gamma, double eta)
{
    if (t < 0.0)
        throw std::domain_error("t must be >= 0");
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::domain_error("eta must be in [0,1]");
    const double u = std::exp(-2.0 * gamma * t);
    return u * (0.5 + 0.5 * (1.0 - eta) * (1.0 - u));
}

/// Inverse of feedback_linear_entropy in t.
///
/// Solving the quadratic for u = exp(-2 gamma T) and rationalizing the smaller
/// root gives u = 2L / [(1 - eta/2) + sqrt((1 - eta/2)^2 - 2L(1 - eta))], which
/// is free of cancellation for eta near 1 and reduces to u = 2L at eta = 1.
inline double time_to_feedback_entropy(double L, double gamma, double eta)
{
    if (!(L > 0.0 && L <= 0.5))
        throw std::domain_error("L must lie in (0, 1/2]");
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::domain_error("eta must be in [0,1]");
    if (eta == 1.0)
        return -std::log(2.0 * L) / (2.0 * gamma);
    const double h = 1.0 - 0.5 * eta;
    const double disc = std::max(0.0, h * h - 2.0 * L * (1.0 - eta));
    const double u = 2.0 * L / (h + std::sqrt(disc));
    return -std::log(u) / (2.0 * gamma);
}

// --- linear-trajectory solution -------------------------------------------

/// V(t) = exp(-gamma t) |e><e| + |g><g| + R |g><e|.
inline QubitMatrix evolution_operator(double t, double R, double gamma)
{
    if (t < 0.0)
        throw std::domain_error("t must be >= 0");
    QubitMatrix v = QubitMatrix::Zero();
    v(0, 0) = std::exp(-gamma * t);
    v(1, 1) = 1.0;
    v(1, 0) = R;
    return v;
}

/// V(t, R, Q): the second record only enters through R + Q on the qubit,
/// since sigma_minus^2 = 0.
inline QubitMatrix evolution_operator(double t, double R, double Q, double gamma)
{
    return evolution_operator(t, R + Q, gamma);
}

struct TwoNoiseVariances
{
    double observed = 0.0;    // V_R = eta kappa
    double unobserved = 0.0;  // V_Q = (1 - eta) kappa
};

inline TwoNoiseVariances two_noise_variances(double t, double gamma, double eta)
{
    if (t < 0.0)
        throw std::domain_error("t must be >= 0");
    const double k = kappa(t, gamma);
    return {eta * k, (1.0 - eta) * k};
}

/// Variance of the observed stochastic integral R, eta * kappa.
inline double r_stochastic_integral_variance(double t, double gamma, double eta)
{
    return two_noise_variances(t, gamma, eta).observed;
}

/// Conditional state given the observed record R, averaged over Q:
///
///   sigma(R, t) = (1/M) int V(t, R, Q) rho0 V(t, R, Q)^dagger H(Q) dQ.
///
/// Only E[Q] = 0 and E[Q^2] = V_Q enter, so the integral is closed-form.
inline QubitMatrix appendix_sigma(const QubitMatrix& rho0, double R, double t, double gamma,
                                  double eta)
{
    if (!is_valid_state(rho0, 1e-9))
        throw std::invalid_argument("rho0 must be a valid density matrix");
    const auto var = two_noise_variances(t, gamma, eta);
    const QubitMatrix sm = sigma_minus();
    const QubitMatrix sp = sm.adjoint();
    const QubitMatrix first = sm * rho0 + rho0 * sp;
    const QubitMatrix second = sm * rho0 * sp;
    QubitMatrix d = QubitMatrix::Zero();
    d(0, 0) = std::exp(-gamma * t);
    d(1, 1) = 1.0;
    const QubitMatrix unnorm = d * (rho0 + R * first + (R * R + var.unobserved) * second) * d;
    return unnorm / unnorm.trace();
}

/// The same Q-average evaluated by Gauss-Hermite quadrature, for cross-checks.
inline QubitMatrix appendix_sigma_quadrature(const QubitMatrix& rho0, double R, double t,
                                             double gamma, double eta)
{
    if (!is_valid_state(rho0, 1e-9))
        throw std::invalid_argument("rho0 must be a valid density matrix");
    const auto var = two_noise_variances(t, gamma, eta);
    QubitMatrix acc;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            auto entry = [&](double Q, bool imag) {
                const QubitMatrix v = evolution_operator(t, R, Q, gamma);
                const std::complex<double> e = (v * rho0 * v.adjoint())(i, j);
                return imag ? e.imag() : e.real();
            };
            const double re = expect_normal([&](double Q) { return entry(Q, false); },
                                            var.unobserved, 1e-13);
            const double im = expect_normal([&](double Q) { return entry(Q, true); },
                                            var.unobserved, 1e-13);
            acc(i, j) = {re, im};
        }
    }
    return acc / acc.trace();
}

/// Which off-diagonal coefficient to use for the I/2 solution. `derived`
/// follows from V(t) and is the default; `printed` drops the factor R and is
/// kept only for comparison (at t = 0, R = 0 it gives a pure state instead of I/2).
enum class OffDiagonalForm
{
    derived,
    printed,
};

/// Conditional state from rho(0) = I/2 given R:
///
///   [[u, c], [c, 1 + R^2 + (1 - eta) kappa]] / (2N),   N = 1 + R^2/2 - eta kappa/2,
///
/// with u = exp(-2 gamma t) and c = R exp(-gamma t) (derived form).
inline QubitMatrix rho_given_r(double t, double R, double gamma, double eta,
                               OffDiagonalForm form = OffDiagonalForm::derived)
{
    if (t < 0.0)
        throw std::domain_error("t must be >= 0");
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::domain_error("eta must be in [0,1]");
    const double k = kappa(t, gamma);
    const double u = std::exp(-2.0 * gamma * t);
    const double two_n = 2.0 + R * R - eta * k;
    const double off = (form == OffDiagonalForm::derived ? R : 1.0) * std::exp(-gamma * t);
    QubitMatrix m;
    m(0, 0) = u;
    m(0, 1) = off;
    m(1, 0) = off;
    m(1, 1) = 1.0 + R * R + (1.0 - eta) * k;
    return m / two_n;
}

class DegenerateDensity : public std::domain_error
{
  public:
    DegenerateDensity()
        : std::domain_error("R density is a point mass at R = 0 (t = 0 or eta = 0)")
    {
    }
};

/// Actual probability density of the observed record R at time t,
///
///   P(R, t) = (2 + R^2 - eta kappa) exp(-R^2 / (2 eta kappa)) / sqrt(8 pi eta kappa).
class RDensity
{
  public:
    RDensity(double t, double gamma, double eta) : t_(t), eta_(eta), kappa_(0.0)
    {
        if (t < 0.0)
            throw std::domain_error("t must be >= 0");
        if (!(eta >= 0.0 && eta <= 1.0))
            throw std::domain_error("eta must be in [0,1]");
        kappa_ = kappa(t, gamma);
    }

    [[nodiscard]] double t() const { return t_; }
    [[nodiscard]] double eta() const { return eta_; }
    [[nodiscard]] double kappa_value() const { return kappa_; }
    [[nodiscard]] double reference_variance() const { return eta_ * kappa_; }
    [[nodiscard]] bool is_point_mass() const { return reference_variance() == 0.0; }

    /// Throws DegenerateDensity when the distribution is a point mass.
    [[nodiscard]] double operator()(double R) const
    {
        if (is_point_mass())
            throw DegenerateDensity();
        const double v = reference_variance();
        return (2.0 + R * R - v) * std::exp(-0.5 * R * R / v) /
               std::sqrt(8.0 * std::numbers::pi * v);
    }

    /// Ratio of the actual to the reference (Gaussian) density, N(R).
    [[nodiscard]] double reweighting(double R) const
    {
        return 1.0 + 0.5 * R * R - 0.5 * reference_variance();
    }

  private:
    double t_;
    double eta_;
    double kappa_;
};

inline double r_density(double t, double R, double gamma, double eta)
{
    return RDensity(t, gamma, eta)(R);
}

/// Ensemble-average linear entropy without feedback from I/2,
/// <L(t)> = int (1 - Tr[rho(t, R)^2]) P(R, t) dR, by Gaussian-weight quadrature
/// under the reference measure of R.
inline double mean_linear_entropy_nofeedback(double t, double gamma, double eta,
                                             OffDiagonalForm form = OffDiagonalForm::derived,
                                             double tol = default_quadrature_tolerance)
{
    const RDensity density(t, gamma, eta);
    auto entropy_at = [&](double R) { return linear_entropy(rho_given_r(t, R, gamma, eta, form)); };
    if (density.is_point_mass())
        return entropy_at(0.0);
    return expect_normal([&](double R) { return density.reweighting(R) * entropy_at(R); },
                         density.reference_variance(), tol);
}

// --- Wiseman-Ralph analogue -------------------------------------------------

/// Mean first-passage time to L for the reduced WR dynamics at eta = 1,
///
///   <T> = sqrt(1 - 2L) / (4 gamma) * ln[(1 + sqrt(1 - 2L)) / (1 - sqrt(1 - 2L))].
inline double wr_mean_time(double L, double gamma)
{
    if (!(L > 0.0 && L <= 0.5))
        throw std::domain_error("L must lie in (0, 1/2]");
    const double r = std::sqrt(1.0 - 2.0 * L);
    // 1 - r = 2L / (1 + r), which keeps the logarithm accurate for small L.
    const double log_ratio = std::log((1.0 + r) * (1.0 + r) / (2.0 * L));
    return r * log_ratio / (4.0 * gamma);
}

/// Small-L asymptote of wr_mean_time, -ln(L/2) / (4 gamma).
inline double wr_mean_time_asymptote(double L, double gamma)
{
    return -std::log(0.5 * L) / (4.0 * gamma);
}

} // namespace homodyne
