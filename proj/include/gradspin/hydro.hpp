#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gradspin/engine.hpp"
#include "gradspin/lattice.hpp"
#include "gradspin/measures.hpp"
#include "gradspin/models.hpp"
#include "gradspin/test_function.hpp"

namespace gradspin {

/// <pi^N, G> = (1/N) sum_x eta_x G(x/N).
double pair(const Configuration& config, const TestFunction& g);

/// Solution of d_t rho = D rho'' on the unit torus,
///   rho(t, u) = sum_{|k| <= K} c_k e^{-D (2 pi k)^2 t} e^{2 pi i k u},
/// stored through c_0 .. c_K (c_{-k} = conj(c_k)).
class HeatSolution {
public:
  HeatSolution(double diffusion, std::vector<std::complex<double>> coefficients);

  double diffusion() const noexcept { return d_; }
  int k_max() const noexcept { return static_cast<int>(c_.size()) - 1; }
  const std::vector<std::complex<double>>& coefficients() const noexcept { return c_; }

  /// c_k e^{-D (2 pi k)^2 t}; zero for k > K.
  std::complex<double> mode(int k, double t) const;
  double operator()(double t, double u) const;
  /// int_0^1 G(u) rho(t, u) du, exact for the preset test functions.
  double integral(const TestFunction& g, double t) const;

private:
  double d_;
  std::vector<std::complex<double>> c_;
};

/// Fourier coefficients of the profile by the trapezoid rule on a 4096-point
/// grid, truncated at k_max (1 <= k_max < 2048).
HeatSolution solve_heat(const Profile& profile, double diffusion, int k_max = 64);

/// Block averages (B/N) sum_{x in block b} eta_x. Throws std::invalid_argument
/// unless B >= 1 divides N.
std::vector<double> binned_profile(const Configuration& config, std::size_t bins);
/// Mean site position of each block, (b W + (W - 1)/2) / N with W = N/B.
std::vector<double> bin_centers(std::size_t n, std::size_t bins);

enum class ErrorNorm { L1, L2, sup_pairing };
std::string_view to_string(ErrorNorm norm) noexcept;

/// Mean absolute (L1) or root-mean-square (L2) difference between a binned
/// profile on N sites and rho(t, .) at the bin centers.
double profile_error(const std::vector<double>& binned, std::size_t n, const HeatSolution& heat,
                     double t, ErrorNorm norm);
/// max_G |pairing_G - int G rho(t)| over the given test functions.
double sup_pairing_error(const std::vector<TestFunction>& functions,
                         const std::vector<double>& pairings, const HeatSolution& heat, double t);

struct ConvergenceConfig {
  ModelSpec model;
  Profile profile;
  std::vector<std::size_t> n_list;
  std::vector<double> t_list;
  std::size_t replicas = 200;
  std::uint64_t seed = 0;
  std::size_t bins = 32;
  std::vector<TestFunction> pairings;  // for the sup-pairing norm; defaults if empty
  int k_max = 64;
  std::size_t bootstrap = 200;
  Execution mode = Execution::parallel;
};

struct ConvergenceRow {
  std::size_t n = 0;
  double t = 0.0;
  ErrorNorm norm = ErrorNorm::L1;
  double error = 0.0;
  double se = 0.0;  // bootstrap standard error over replicas
};

struct BinnedMean {
  std::size_t n = 0;
  double t = 0.0;
  std::vector<double> centers;
  std::vector<double> mean;
  std::vector<double> se;
  std::vector<double> reference;  // rho(t, center)
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  std::vector<BinnedMean> profiles;
  std::uint64_t events = 0;
};

/// For each N: R replicas started from the profile measure, observed at every
/// t; errors of the replica-mean binned profile and pairings against the
/// heat equation with D of the model. Deterministic given the seed.
ConvergenceResult convergence_experiment(const ConvergenceConfig& config);

/// Header "N,t,norm,error,se".
std::string rows_csv(const std::vector<ConvergenceRow>& rows);
/// Header "N,t,bin,center,mean,se,reference".
std::string profiles_csv(const std::vector<BinnedMean>& profiles);

}  // namespace gradspin
