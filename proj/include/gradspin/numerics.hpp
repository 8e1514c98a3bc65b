#pragma once

#include <cstdint>
#include <functional>

#include "gradspin/rng.hpp"

namespace gradspin {

// ---------------------------------------------------------------------------
// Special functions. All throw std::domain_error for x <= 0 (or NaN).
// ---------------------------------------------------------------------------

double log_gamma(double x);
double digamma(double x);
/// First polygamma function psi'(x).
double trigamma(double x);

/// ln B(a, b) = ln G(a) + ln G(b) - ln G(a + b).
double log_beta(double a, double b);

// ---------------------------------------------------------------------------
// Samplers. Non-positive parameters throw std::domain_error.
// ---------------------------------------------------------------------------

double sample_beta(double a, double b, RngStream& rng);
double sample_gamma(double shape, double scale, RngStream& rng);

/// Geometric law on {0, 1, ...} with mean rho:
/// P(k) = (1/(1+rho)) (rho/(1+rho))^k.
std::int64_t sample_geometric_mean(double rho, RngStream& rng);

/// Negative binomial with size r and mean r * rho:
/// P(k) = (1/(1+rho))^r (rho/(1+rho))^k G(r+k) / (k! G(r)).
/// With r = 1 this is the geometric law above.
std::int64_t sample_negative_binomial(double r, double rho, RngStream& rng);

// PMFs, CDFs and quantiles of the same laws. Quantiles are monotone in the
// uniform argument, which is what the inverse-CDF couplings rely on.

double geometric_pmf(double rho, std::int64_t k);
double negative_binomial_pmf(double r, double rho, std::int64_t k);
double negative_binomial_cdf(double r, double rho, std::int64_t k);
std::int64_t geometric_quantile(double rho, double u);
std::int64_t negative_binomial_quantile(double r, double rho, double u);
double gamma_cdf(double shape, double scale, double x);
double gamma_quantile(double shape, double scale, double u);

/// Beta-binomial PMF  C(n,k) B(k+a0, n-k+b0) / B(a0, b0).
/// Throws std::out_of_range for k outside [0, n].
double beta_binomial_pmf(std::int64_t n, std::int64_t k, double a0, double b0);

// ---------------------------------------------------------------------------
// Quadrature on [0, 1].
// ---------------------------------------------------------------------------

struct QuadratureResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
};

/// Integrand receiving both u and 1 - u, each computed without cancellation.
using Integrand01 = std::function<double(double u, double one_minus_u)>;

/// Integrates f over [0, 1]. Substitutes u = sin^2(theta) and runs tanh-sinh
/// refinement on theta in [0, pi/2], which absorbs endpoint singularities of
/// the form u^(2s-1)(1-u)^(2s-1). Throws std::runtime_error when the error
/// estimate does not reach tol (relative to the L1 norm of the integrand,
/// floored at 1).
QuadratureResult integrate_01(const Integrand01& f, double tol = 1e-12);
QuadratureResult integrate_01(const std::function<double(double)>& f, double tol = 1e-12);

}  // namespace gradspin
