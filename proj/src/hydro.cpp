#include "gradspin/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fftw3.h>
#include <fmt/format.h>

namespace gradspin {

double pair(const Configuration& config, const TestFunction& g) {
  const std::size_t n = size_of(config);
  const auto grid = g.grid(n);
  double acc = 0.0;
  for (std::size_t x = 0; x < n; ++x) acc += value_at(config, x) * grid[x];
  return acc / static_cast<double>(n);
}

// ---------------------------------------------------------------------------

HeatSolution::HeatSolution(double diffusion, std::vector<std::complex<double>> coefficients)
    : d_(diffusion), c_(std::move(coefficients)) {
  if (!(d_ > 0.0) || !std::isfinite(d_)) {
    throw std::invalid_argument(fmt::format("diffusion coefficient must be positive, got {}", d_));
  }
  if (c_.size() < 2) throw std::invalid_argument("heat solution needs k_max >= 1");
}

std::complex<double> HeatSolution::mode(int k, double t) const {
  if (k < 0) return std::conj(mode(-k, t));
  if (k > k_max()) return {0.0, 0.0};
  const double w = 2.0 * std::numbers::pi * k;
  return c_[static_cast<std::size_t>(k)] * std::exp(-d_ * w * w * t);
}

double HeatSolution::operator()(double t, double u) const {
  double acc = c_[0].real();
  for (int k = 1; k <= k_max(); ++k) {
    const double theta = 2.0 * std::numbers::pi * k * u;
    const auto m = mode(k, t);
    acc += 2.0 * (m.real() * std::cos(theta) - m.imag() * std::sin(theta));
  }
  return acc;
}

double HeatSolution::integral(const TestFunction& g, double t) const {
  switch (g.shape()) {
    case TestFunction::Shape::one: return c_[0].real();
    case TestFunction::Shape::cos: return mode(g.mode(), t).real();
    case TestFunction::Shape::sin: return -mode(g.mode(), t).imag();
  }
  return 0.0;
}

HeatSolution solve_heat(const Profile& profile, double diffusion, int k_max) {
  constexpr int kGrid = 4096;
  if (k_max < 1 || k_max >= kGrid / 2) {
    throw std::invalid_argument(fmt::format("k_max must lie in [1, {}), got {}", kGrid / 2, k_max));
  }
  std::vector<double> samples(kGrid);
  for (int j = 0; j < kGrid; ++j) samples[static_cast<std::size_t>(j)] = profile(static_cast<double>(j) / kGrid);
  std::vector<std::complex<double>> spectrum(kGrid / 2 + 1);
  // FFTW planning is not thread safe; FFTW_ESTIMATE plans are cheap.
  fftw_plan plan = nullptr;
#pragma omp critical(gradspin_fftw_plan)
  plan = fftw_plan_dft_r2c_1d(kGrid, samples.data(),
                              reinterpret_cast<fftw_complex*>(spectrum.data()), FFTW_ESTIMATE);
  fftw_execute(plan);
#pragma omp critical(gradspin_fftw_plan)
  fftw_destroy_plan(plan);

  std::vector<std::complex<double>> c(static_cast<std::size_t>(k_max) + 1);
  for (int k = 0; k <= k_max; ++k) c[static_cast<std::size_t>(k)] = spectrum[static_cast<std::size_t>(k)] / static_cast<double>(kGrid);
  // Drop rounding noise so that exactly representable presets stay exact.
  for (auto& z : c) {
    if (std::abs(z.real()) < 1e-15) z.real(0.0);
    if (std::abs(z.imag()) < 1e-15) z.imag(0.0);
  }
  return HeatSolution(diffusion, std::move(c));
}

// ---------------------------------------------------------------------------

std::vector<double> binned_profile(const Configuration& config, std::size_t bins) {
  const std::size_t n = size_of(config);
  if (bins == 0 || n % bins != 0) {
    throw std::invalid_argument(fmt::format("bin count {} does not divide N = {}", bins, n));
  }
  const std::size_t width = n / bins;
  std::vector<double> out(bins, 0.0);
  for (std::size_t x = 0; x < n; ++x) out[x / width] += value_at(config, x);
  for (auto& v : out) v /= static_cast<double>(width);
  return out;
}

std::vector<double> bin_centers(std::size_t n, std::size_t bins) {
  if (bins == 0 || n % bins != 0) {
    throw std::invalid_argument(fmt::format("bin count {} does not divide N = {}", bins, n));
  }
  const double width = static_cast<double>(n / bins);
  std::vector<double> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b] = (static_cast<double>(b) * width + (width - 1.0) / 2.0) / static_cast<double>(n);
  }
  return out;
}

std::string_view to_string(ErrorNorm norm) noexcept {
  switch (norm) {
    case ErrorNorm::L1: return "L1";
    case ErrorNorm::L2: return "L2";
    case ErrorNorm::sup_pairing: return "sup_pairing";
  }
  return "?";
}

double profile_error(const std::vector<double>& binned, std::size_t n, const HeatSolution& heat,
                     double t, ErrorNorm norm) {
  if (norm == ErrorNorm::sup_pairing) {
    throw std::invalid_argument("profile_error: use sup_pairing_error for the pairing norm");
  }
  const auto centers = bin_centers(n, binned.size());
  double acc = 0.0;
  for (std::size_t b = 0; b < binned.size(); ++b) {
    const double d = binned[b] - heat(t, centers[b]);
    acc += norm == ErrorNorm::L1 ? std::abs(d) : d * d;
  }
  acc /= static_cast<double>(binned.size());
  return norm == ErrorNorm::L1 ? acc : std::sqrt(acc);
}

double sup_pairing_error(const std::vector<TestFunction>& functions,
                         const std::vector<double>& pairings, const HeatSolution& heat, double t) {
  if (functions.size() != pairings.size()) {
    throw std::invalid_argument("sup_pairing_error: functions and pairings differ in length");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < functions.size(); ++i) {
    worst = std::max(worst, std::abs(pairings[i] - heat.integral(functions[i], t)));
  }
  return worst;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<TestFunction> default_pairings() {
  return {TestFunction::one(), TestFunction::cosine(1), TestFunction::sine(1),
          TestFunction::cosine(2), TestFunction::sine(2)};
}

struct Errors {
  double l1, l2, sup;
};

Errors errors_for(const std::vector<std::vector<double>>& binned,
                  const std::vector<std::vector<double>>& pairings,
                  const std::vector<std::size_t>& pick, std::size_t n,
                  const std::vector<TestFunction>& functions, const HeatSolution& heat, double t) {
  const std::size_t bins = binned.front().size();
  std::vector<double> mean_b(bins, 0.0);
  std::vector<double> mean_p(functions.size(), 0.0);
  for (std::size_t r : pick) {
    for (std::size_t b = 0; b < bins; ++b) mean_b[b] += binned[r][b];
    for (std::size_t i = 0; i < functions.size(); ++i) mean_p[i] += pairings[r][i];
  }
  const double inv = 1.0 / static_cast<double>(pick.size());
  for (auto& v : mean_b) v *= inv;
  for (auto& v : mean_p) v *= inv;
  return {profile_error(mean_b, n, heat, t, ErrorNorm::L1),
          profile_error(mean_b, n, heat, t, ErrorNorm::L2),
          sup_pairing_error(functions, mean_p, heat, t)};
}

double standard_deviation(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

ConvergenceResult convergence_experiment(const ConvergenceConfig& cfg) {
  if (cfg.n_list.empty()) throw std::invalid_argument("N_list must not be empty");
  if (cfg.t_list.empty()) throw std::invalid_argument("t_list must not be empty");
  if (cfg.replicas == 0) throw std::invalid_argument("replicas must be at least 1");
  for (std::size_t n : cfg.n_list) {
    if (n < 2) throw std::invalid_argument(fmt::format("N_list: N = {} is below 2", n));
    if (cfg.bins == 0 || n % cfg.bins != 0) {
      throw std::invalid_argument(fmt::format("bins: {} does not divide N = {}", cfg.bins, n));
    }
  }
  std::vector<double> times = cfg.t_list;
  std::sort(times.begin(), times.end());
  const auto functions = cfg.pairings.empty() ? default_pairings() : cfg.pairings;
  const HeatSolution heat = solve_heat(cfg.profile, diffusion_coefficient(cfg.model), cfg.k_max);

  ConvergenceResult result;
  for (std::size_t n : cfg.n_list) {
    const ModelSpec model = cfg.model;
    const Profile profile = cfg.profile;
    ReplicaJob job{model,
                   [model, profile, n](RngStream& rng) {
                     return sample_profile_measure(model, profile, n, rng);
                   },
                   {},
                   hash64(cfg.seed, n)};
    job.plan.macro_times = times;
    job.plan.pairings = functions;
    job.plan.record_mass = true;
    job.plan.record_profile = true;
    const auto replicas = run_replicas(job, cfg.replicas, cfg.mode);
    for (const auto& r : replicas) {
      if (!r.ok()) throw std::runtime_error(fmt::format("N={} replica {}: {}", n, r.replica, r.error));
      result.events += r.events;
    }

    const auto centers = bin_centers(n, cfg.bins);
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      const double t = times[ti];
      std::vector<std::vector<double>> binned;
      std::vector<std::vector<double>> pairings;
      binned.reserve(replicas.size());
      for (const auto& r : replicas) {
        const auto& obs = r.observations[ti];
        binned.push_back(binned_profile(EnergyConfig{obs.profile}, cfg.bins));
        pairings.push_back(obs.pairings);
      }
      std::vector<std::size_t> all(replicas.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      const Errors point = errors_for(binned, pairings, all, n, functions, heat, t);

      RngStream boot(hash64(cfg.seed, 0xB0075ULL), n * 4096 + ti);
      std::vector<double> b1, b2, bs;
      std::vector<std::size_t> pick(replicas.size());
      for (std::size_t b = 0; b < cfg.bootstrap; ++b) {
        for (auto& p : pick) p = boot.uniform_index(replicas.size());
        const Errors e = errors_for(binned, pairings, pick, n, functions, heat, t);
        b1.push_back(e.l1);
        b2.push_back(e.l2);
        bs.push_back(e.sup);
      }
      result.rows.push_back({n, t, ErrorNorm::L1, point.l1, standard_deviation(b1)});
      result.rows.push_back({n, t, ErrorNorm::L2, point.l2, standard_deviation(b2)});
      result.rows.push_back({n, t, ErrorNorm::sup_pairing, point.sup, standard_deviation(bs)});

      BinnedMean bm;
      bm.n = n;
      bm.t = t;
      bm.centers = centers;
      bm.mean.assign(cfg.bins, 0.0);
      bm.se.assign(cfg.bins, 0.0);
      for (std::size_t b = 0; b < cfg.bins; ++b) {
        std::vector<double> column;
        column.reserve(binned.size());
        for (const auto& row : binned) column.push_back(row[b]);
        double m = 0.0;
        for (double v : column) m += v;
        bm.mean[b] = m / static_cast<double>(column.size());
        bm.se[b] = standard_deviation(column) / std::sqrt(static_cast<double>(column.size()));
        bm.reference.push_back(heat(t, centers[b]));
      }
      result.profiles.push_back(std::move(bm));
    }
  }
  return result;
}

std::string rows_csv(const std::vector<ConvergenceRow>& rows) {
  std::string out = "N,t,norm,error,se\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{:.17g},{:.17g}\n", r.n, r.t, to_string(r.norm), r.error, r.se);
  }
  return out;
}

std::string profiles_csv(const std::vector<BinnedMean>& profiles) {
  std::string out = "N,t,bin,center,mean,se,reference\n";
  for (const auto& p : profiles) {
    for (std::size_t b = 0; b < p.mean.size(); ++b) {
      out += fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", p.n, p.t, b, p.centers[b],
                         p.mean[b], p.se[b], p.reference[b]);
    }
  }
  return out;
}

}  // namespace gradspin
