#include "gradspin/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

namespace gradspin {

namespace {

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error(std::string(what) + " must be positive and finite, got " +
                            std::to_string(x));
  }
}

// Marsaglia-Tsang squeeze for shape >= 1, unit scale.
double gamma_unit_large(double shape, RngStream& rng) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

// log of a Gamma(shape, 1) variate; stays finite for small shapes where the
// variate itself can underflow.
double log_gamma_variate(double shape, RngStream& rng) {
  if (shape >= 1.0) return std::log(gamma_unit_large(shape, rng));
  const double g = gamma_unit_large(shape + 1.0, rng);
  return std::log(g) + std::log(rng.uniform_open()) / shape;
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma argument");
  return boost::math::lgamma(x);
}

double digamma(double x) {
  require_positive(x, "digamma argument");
  return boost::math::digamma(x);
}

double trigamma(double x) {
  require_positive(x, "trigamma argument");
  return boost::math::trigamma(x);
}

double log_beta(double a, double b) {
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

double sample_beta(double a, double b, RngStream& rng) {
  require_positive(a, "beta parameter a");
  require_positive(b, "beta parameter b");
  if (a == 1.0 && b == 1.0) return rng.uniform_open();
  double u;
  if (a >= 1.0 && b >= 1.0) {
    const double x = gamma_unit_large(a, rng);
    const double y = gamma_unit_large(b, rng);
    u = x / (x + y);
  } else {
    const double lx = log_gamma_variate(a, rng);
    const double ly = log_gamma_variate(b, rng);
    u = 1.0 / (1.0 + std::exp(ly - lx));
  }
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return std::clamp(u, lo, hi);
}

double sample_gamma(double shape, double scale, RngStream& rng) {
  require_positive(shape, "gamma shape");
  require_positive(scale, "gamma scale");
  if (shape == 1.0) return scale * rng.exponential();
  if (shape > 1.0) return scale * gamma_unit_large(shape, rng);
  return scale * gamma_unit_large(shape + 1.0, rng) *
         std::pow(rng.uniform_open(), 1.0 / shape);
}

std::int64_t sample_geometric_mean(double rho, RngStream& rng) {
  return geometric_quantile(rho, rng.uniform());
}

std::int64_t sample_negative_binomial(double r, double rho, RngStream& rng) {
  return negative_binomial_quantile(r, rho, rng.uniform());
}

double geometric_pmf(double rho, std::int64_t k) {
  return negative_binomial_pmf(1.0, rho, k);
}

double negative_binomial_pmf(double r, double rho, std::int64_t k) {
  require_positive(r, "negative binomial size");
  require_positive(rho, "negative binomial rho");
  if (k < 0) return 0.0;
  const auto kd = static_cast<double>(k);
  const double log_p = std::log(rho) - std::log1p(rho);
  const double log_q = -std::log1p(rho);
  return std::exp(r * log_q + kd * log_p + log_gamma(r + kd) - log_gamma(kd + 1.0) -
                  log_gamma(r));
}

double negative_binomial_cdf(double r, double rho, std::int64_t k) {
  require_positive(r, "negative binomial size");
  require_positive(rho, "negative binomial rho");
  if (k < 0) return 0.0;
  // P(K <= k) = I_{1/(1+rho)}(r, k + 1)
  return boost::math::ibeta(r, static_cast<double>(k) + 1.0, 1.0 / (1.0 + rho));
}

std::int64_t geometric_quantile(double rho, double u) {
  require_positive(rho, "geometric mean");
  if (!(u >= 0.0 && u < 1.0)) throw std::domain_error("quantile level must lie in [0,1)");
  // P(K <= k) = 1 - p^(k+1), p = rho / (1 + rho)
  const double log_p = -std::log1p(1.0 / rho);
  return static_cast<std::int64_t>(std::floor(std::log1p(-u) / log_p));
}

std::int64_t negative_binomial_quantile(double r, double rho, double u) {
  require_positive(r, "negative binomial size");
  require_positive(rho, "negative binomial rho");
  if (!(u >= 0.0 && u < 1.0)) throw std::domain_error("quantile level must lie in [0,1)");
  const double p = rho / (1.0 + rho);
  double pmf = std::exp(-r * std::log1p(rho));
  if (pmf == 0.0) throw std::domain_error("negative binomial parameters outside supported range");
  const double mean = r * rho;
  double cdf = 0.0;
  for (std::int64_t k = 0;; ++k) {
    cdf += pmf;
    if (u < cdf) return k;
    const auto kd = static_cast<double>(k);
    pmf *= p * (r + kd) / (kd + 1.0);
    // Remaining tail mass below double resolution: u sits in rounding slack.
    if (pmf < std::numeric_limits<double>::epsilon() * cdf * 1e-3 && kd > mean) return k + 1;
  }
}

double gamma_cdf(double shape, double scale, double x) {
  require_positive(shape, "gamma shape");
  require_positive(scale, "gamma scale");
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(shape, x / scale);
}

double gamma_quantile(double shape, double scale, double u) {
  require_positive(shape, "gamma shape");
  require_positive(scale, "gamma scale");
  if (!(u >= 0.0 && u < 1.0)) throw std::domain_error("quantile level must lie in [0,1)");
  if (u == 0.0) return 0.0;
  return scale * boost::math::gamma_p_inv(shape, u);
}

double beta_binomial_pmf(std::int64_t n, std::int64_t k, double a0, double b0) {
  if (n < 0 || k < 0 || k > n) {
    throw std::out_of_range("beta_binomial_pmf: need 0 <= k <= n, got n=" + std::to_string(n) +
                            " k=" + std::to_string(k));
  }
  require_positive(a0, "beta-binomial alpha");
  require_positive(b0, "beta-binomial beta");
  const auto nd = static_cast<double>(n);
  const auto kd = static_cast<double>(k);
  const double log_choose = log_gamma(nd + 1.0) - log_gamma(kd + 1.0) - log_gamma(nd - kd + 1.0);
  return std::exp(log_choose + log_beta(kd + a0, nd - kd + b0) - log_beta(a0, b0));
}

QuadratureResult integrate_01(const Integrand01& f, double tol) {
  if (!(tol > 0.0)) throw std::domain_error("quadrature tolerance must be positive");
  // u = sin^2(phi) on [0, pi/4] covers u in [0, 1/2]; the mirrored branch
  // u = cos^2(phi) covers [1/2, 1]. Both singular endpoints sit at phi = 0,
  // where phi, sin(phi) and the small one of (u, 1-u) are all exact-ish.
  auto g = [&f](double phi) {
    const double s = std::sin(phi);
    const double c = std::cos(phi);
    const double s2 = s * s;
    const double c2 = c * c;
    const double jac = 2.0 * s * c;
    double acc = 0.0;
    if (s2 > 0.0) {
      acc += f(s2, c2);
      acc += f(c2, s2);
    }
    return acc * jac;
  };
  // Boost may stop one level early with an estimate just above its target,
  // so ask it for a tenth of tol and check tol ourselves.
  boost::math::quadrature::tanh_sinh<double> integrator(18);
  double err = 0.0;
  double l1 = 0.0;
  const double value =
      integrator.integrate(g, 0.0, std::numbers::pi / 4.0, 0.1 * tol, &err, &l1);
  if (!std::isfinite(value) || !(err <= tol * std::max(1.0, l1))) {
    throw std::runtime_error("integrate_01: no convergence (error estimate " +
                             std::to_string(err) + ")");
  }
  return {value, err};
}

QuadratureResult integrate_01(const std::function<double(double)>& f, double tol) {
  return integrate_01(Integrand01([&f](double u, double) { return f(u); }), tol);
}

}  // namespace gradspin
