#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gradspin/lattice.hpp"
#include "gradspin/models.hpp"
#include "gradspin/rng.hpp"

namespace gradspin {

/// Invariant product measure nu_rho of a model. Marginals:
///   gKMP  Gamma(shape 2s, scale rho)          mean 2s rho
///   dKMP  geometric on {0,1,..} with mean rho
///   Harm  negative binomial(2s, p = rho/(1+rho)), mean 2s rho
struct InvariantSpec {
  ModelSpec model;
  double rho;
};

/// Throws std::invalid_argument unless rho is positive and finite.
void validate(const InvariantSpec& spec);

Configuration sample_invariant(const InvariantSpec& spec, std::size_t n, RngStream& rng);

/// Mean of one site under nu_rho.
double marginal_mean(const ModelSpec& model, double rho) noexcept;

enum class MomentKind { raw, factorial };

struct Moment {
  double value;
  MomentKind kind;
};

/// gKMP: raw moment E[eta^m] = rho^m G(2s+m)/G(2s).
/// dKMP: factorial moment E[eta(eta-1)..(eta-m+1)] = m! rho^m.
/// Harm: factorial moment rho^m G(2s+m)/G(2s).
/// Throws std::invalid_argument for m < 1.
Moment moment(const InvariantSpec& spec, int m);

/// Density profile rho0 on the unit torus (1-periodic).
///
/// Presets: "const:c", "sine:a,b" (a + b sin(2 pi u), a > |b|),
/// "step:c1,c2,u*" (c1 on [0,u*), c2 on [u*,1)), "table:<path>" (CSV rows
/// u,rho0(u); evaluation at the nearest tabulated point, periodically).
class Profile {
public:
  static Profile constant(double c);
  static Profile sine(double a, double b);
  static Profile step(double c1, double c2, double u_star);
  static Profile table(std::vector<std::pair<double, double>> points);
  /// Parses a preset. Throws std::invalid_argument (std::runtime_error when a
  /// table file cannot be read).
  static Profile parse(std::string_view preset);

  enum class Kind { constant, sine, step, table };

  Kind kind() const noexcept { return kind_; }
  const std::vector<double>& parameters() const noexcept { return params_; }
  const std::vector<std::pair<double, double>>& points() const noexcept { return points_; }
  std::string name() const;

  double operator()(double u) const;
  double sup() const noexcept { return sup_; }
  double inf() const noexcept { return inf_; }

  /// rho0(x/N) for x = 0..N-1.
  std::vector<double> grid(std::size_t n) const;

private:
  Profile(Kind kind, std::vector<double> params, std::vector<std::pair<double, double>> points);

  Kind kind_;
  std::vector<double> params_;
  std::vector<std::pair<double, double>> points_;  // sorted by u in [0,1)
  double sup_ = 0.0;
  double inf_ = 0.0;
};

/// Parameter of the invariant marginal whose mean is `density`:
/// density/(2s) for gKMP and Harm, density for dKMP.
double local_parameter(const ModelSpec& model, double density) noexcept;

/// Product measure associated with a profile: site x is drawn from the
/// invariant marginal with mean rho0(x/N); zero density gives zero.
Configuration sample_profile_measure(const ModelSpec& model, const Profile& profile, std::size_t n,
                                     RngStream& rng);

/// Profile measure together with a dominating invariant measure nu_rho_hat.
struct InitialMeasureSpec {
  ModelSpec model;
  Profile profile;
  double rho_hat;
};

class DominationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Checks, by comparing CDFs on a grid, that every site marginal of the
/// profile measure on N sites is stochastically below the nu_rho_hat
/// marginal. Throws DominationError naming the first offending site.
void check_domination(const InitialMeasureSpec& spec, std::size_t n);

/// (eta, xi) with eta ~ profile measure, xi ~ nu_rho_hat, coupled through one
/// shared uniform per site fed to both inverse CDFs, so eta_x <= xi_x.
/// Runs check_domination first.
std::pair<Configuration, Configuration> sample_dominated_pair(const InitialMeasureSpec& spec,
                                                              std::size_t n, RngStream& rng);

}  // namespace gradspin
