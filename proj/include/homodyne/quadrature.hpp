#pragma once

// Gaussian-weight quadrature for expectations over normal densities, with an
// adaptive Gauss-Kronrod fallback on +-10 standard deviations.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace homodyne {

class QuadratureError : public std::runtime_error
{
  public:
    QuadratureError(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved tolerance " + std::to_string(achieved) + ")"),
          achieved_(achieved)
    {
    }

    [[nodiscard]] double achieved_tolerance() const { return achieved_; }

  private:
    double achieved_;
};

/// Nodes and weights for the weight function exp(-x^2) on the real line.
struct GaussHermiteRule
{
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix of the
/// Hermite recurrence.
inline GaussHermiteRule make_gauss_hermite_rule(int n)
{
    if (n < 1)
        throw std::invalid_argument("Gauss-Hermite rule needs n >= 1");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double off = std::sqrt(0.5 * k);
        jacobi(k - 1, k) = off;
        jacobi(k, k - 1) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mu0 = std::sqrt(std::numbers::pi);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = solver.eigenvalues()(i);
        const double v0 = solver.eigenvectors()(0, i);
        rule.weights[i] = mu0 * v0 * v0;
    }
    return rule;
}

namespace detail {

inline const GaussHermiteRule& cached_rule(int n)
{
    static const GaussHermiteRule r64 = make_gauss_hermite_rule(64);
    static const GaussHermiteRule r128 = make_gauss_hermite_rule(128);
    if (n == 64)
        return r64;
    if (n == 128)
        return r128;
    throw std::invalid_argument("only 64- and 128-point rules are cached");
}

template <class F>
double apply_rule(const GaussHermiteRule& rule, F&& f, double variance)
{
    const double scale = std::sqrt(2.0 * variance);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        acc += rule.weights[i] * f(scale * rule.nodes[i]);
    return acc / std::sqrt(std::numbers::pi);
}

} // namespace detail

inline constexpr double default_quadrature_tolerance = 1e-9;

/// Adaptive 61-point Gauss-Kronrod on [a, b]. Throws QuadratureError when the
/// error estimate stays above `tol`.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double tol = default_quadrature_tolerance)
{
    double err = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, a, b, 20, 1e-14, &err);
    if (!(err <= tol))
        throw QuadratureError("adaptive Gauss-Kronrod did not converge", err);
    return value;
}

/// E[f(X)] for X ~ N(0, variance).
///
/// Compares the 64- and 128-point Gauss-Hermite estimates; when they disagree
/// by more than `tol` the expectation is redone adaptively on +-10 sigma.
/// variance == 0 returns f(0).
template <class F>
double expect_normal(F&& f, double variance, double tol = default_quadrature_tolerance)
{
    if (variance < 0.0)
        throw std::invalid_argument("variance must be >= 0");
    if (variance == 0.0)
        return f(0.0);
    const double coarse = detail::apply_rule(detail::cached_rule(64), f, variance);
    const double fine = detail::apply_rule(detail::cached_rule(128), f, variance);
    if (std::abs(fine - coarse) <= tol)
        return fine;

    const double sd = std::sqrt(variance);
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * variance);
    auto weighted = [&](double r) { return f(r) * norm * std::exp(-0.5 * r * r / variance); };
    return integrate_adaptive(weighted, -10.0 * sd, 10.0 * sd, tol);
}

} // namespace homodyne
