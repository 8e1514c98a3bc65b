#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gradspin/lattice.hpp"
#include "gradspin/numerics.hpp"

namespace gradspin {

enum class ModelKind { gKMP, dKMP, Harm };

std::string_view to_string(ModelKind kind) noexcept;
/// Accepts "gKMP", "dKMP", "Harm" (case-insensitive). Throws std::invalid_argument.
ModelKind parse_model_kind(std::string_view name);

/// Model kind plus spin s > 0. The discrete KMP model is the s = 1/2 member
/// only, so its spin is pinned to 1/2 whatever is passed in.
class ModelSpec {
public:
  /// Throws std::invalid_argument when spin is not a positive finite number.
  ModelSpec(ModelKind kind, double spin);

  ModelKind kind() const noexcept { return kind_; }
  double spin() const noexcept { return spin_; }
  /// 2s: the Beta parameter (gKMP) or the negative-binomial size (Harm).
  double two_s() const noexcept { return 2.0 * spin_; }
  bool is_particle_model() const noexcept { return kind_ != ModelKind::gKMP; }

  /// Non-fatal diagnostics, e.g. Harm with s < 1/2 (attractiveness unproven).
  std::vector<std::string> warnings() const;

private:
  ModelKind kind_;
  double spin_;
};

/// D = 1/2 for gKMP and dKMP, 1/(2s) for Harm.
double diffusion_coefficient(const ModelSpec& spec) noexcept;

/// Beta(2s, 2s) density G(4s)/G(2s)^2 u^(2s-1) (1-u)^(2s-1).
/// Throws std::domain_error for u outside (0, 1).
double redistribution_weight(double s, double u);
/// Same, with 1 - u supplied separately to avoid cancellation near u = 1.
double redistribution_weight(double s, double u, double one_minus_u);

/// (u S, S - u S) with S = eta_x + eta_y.
std::pair<double, double> apply_gkmp_exchange(double eta_x, double eta_y, double u) noexcept;

/// (r, S - r). Throws std::out_of_range unless 0 <= r <= S.
std::pair<std::int64_t, std::int64_t> apply_dkmp_exchange(std::int64_t eta_x, std::int64_t eta_y,
                                                          std::int64_t r);

/// Rate at which k of the n particles on a site jump to one given neighbour:
/// (1/k) G(n+1) G(n-k+2s) / (G(n-k+1) G(n+2s)), zero unless 1 <= k <= n.
double harm_rate(std::int64_t n, std::int64_t k, double s);

/// One-direction total sum_{k=1}^n harm_rate(n, k, s); 0 for n = 0.
double harm_total_rate(std::int64_t n, double s);

/// Per-occupation cumulative Harm rates C_n(j) = sum_{k<=j} c^k(n), grown
/// lazily to the largest occupation seen. Single owner; not thread safe.
class HarmRateTable {
public:
  explicit HarmRateTable(double s) : s_(s) {}

  double spin() const noexcept { return s_; }
  /// sum_{k=1}^n c^k(n).
  double total(std::int64_t n);
  /// Smallest k in [1, n] with C_n(k) > target, for target in [0, total(n)).
  std::int64_t select(std::int64_t n, double target);
  /// C_n(j) for j in [0, n].
  double cumulative(std::int64_t n, std::int64_t j);

private:
  const std::vector<double>& row(std::int64_t n);

  double s_;
  std::vector<std::vector<double>> rows_;
  std::vector<bool> filled_;
};

// ---------------------------------------------------------------------------
// Generator actions.
// ---------------------------------------------------------------------------

/// Bond generator L_{x,x+1} applied to a local observable f(eta_x, eta_{x+1}),
/// computed directly from the jump/redistribution kernel: quadrature against
/// the Beta weight for gKMP, exhaustive finite sums for dKMP and Harm.
/// Particle-model arguments must be integer valued (std::invalid_argument).
template <class F>
double bond_generator(const ModelSpec& spec, double eta_x, double eta_y, F&& f);

/// Closed form D (eta_{x+1} + eta_{x-1} - 2 eta_x), no N^2 factor.
double generator_eta(const ModelSpec& spec, const Configuration& config, std::size_t x);
/// Same quantity as the sum of two bond-kernel expectations.
double generator_eta_kernel(const ModelSpec& spec, const Configuration& config, std::size_t x);

/// Closed form of L_{x,x+1}(eta_x eta_{x+1}).
double generator_product(const ModelSpec& spec, double eta_x, double eta_y) noexcept;
/// Kernel expectation of the same quantity.
double generator_product_kernel(const ModelSpec& spec, double eta_x, double eta_y);

/// I(s) = int gamma_s(u) u (1-u) du = s / (4s + 1).
double beta_second_moment_gap(double s) noexcept;

/// W_{x,x+1} = D (eta_{x+1} - eta_x).
double instantaneous_current(const ModelSpec& spec, const Configuration& config, std::size_t x);

/// D (eta_x - eta_y)^2 - L_{x,x+1}(eta_x eta_y): the rate-weighted mean
/// square of the mass moved across the bond.
double bond_fluctuation(const ModelSpec& spec, double eta_x, double eta_y) noexcept;

// ---------------------------------------------------------------------------

namespace detail {
std::int64_t require_integer(double v);
}

template <class F>
double bond_generator(const ModelSpec& spec, double eta_x, double eta_y, F&& f) {
  const double base = f(eta_x, eta_y);
  switch (spec.kind()) {
    case ModelKind::gKMP: {
      const double sum = eta_x + eta_y;
      const double s = spec.spin();
      const auto integrand = [&](double u, double v) {
        return redistribution_weight(s, u, v) * (f(u * sum, v * sum) - base);
      };
      return integrate_01(Integrand01(integrand), 1e-10).value;
    }
    case ModelKind::dKMP: {
      const std::int64_t a = detail::require_integer(eta_x);
      const std::int64_t b = detail::require_integer(eta_y);
      const std::int64_t total = a + b;
      double acc = 0.0;
      for (std::int64_t r = 0; r <= total; ++r) {
        acc += f(static_cast<double>(r), static_cast<double>(total - r)) - base;
      }
      return acc / static_cast<double>(total + 1);
    }
    case ModelKind::Harm: {
      const std::int64_t a = detail::require_integer(eta_x);
      const std::int64_t b = detail::require_integer(eta_y);
      const double s = spec.spin();
      double acc = 0.0;
      for (std::int64_t k = 1; k <= a; ++k) {
        acc += harm_rate(a, k, s) *
               (f(static_cast<double>(a - k), static_cast<double>(b + k)) - base);
      }
      for (std::int64_t k = 1; k <= b; ++k) {
        acc += harm_rate(b, k, s) *
               (f(static_cast<double>(a + k), static_cast<double>(b - k)) - base);
      }
      return acc;
    }
  }
  return 0.0;
}

}  // namespace gradspin
