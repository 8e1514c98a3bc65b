#include "gradspin/models.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include <fmt/format.h>

namespace gradspin {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::gKMP: return "gKMP";
    case ModelKind::dKMP: return "dKMP";
    case ModelKind::Harm: return "Harm";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "gkmp") return ModelKind::gKMP;
  if (lower == "dkmp") return ModelKind::dKMP;
  if (lower == "harm" || lower == "harmonic") return ModelKind::Harm;
  throw std::invalid_argument(fmt::format("unknown model '{}' (expected gKMP, dKMP or Harm)", name));
}

ModelSpec::ModelSpec(ModelKind kind, double spin) : kind_(kind), spin_(spin) {
  if (!(spin > 0.0) || !std::isfinite(spin)) {
    throw std::invalid_argument(fmt::format("spin must be positive, got {}", spin));
  }
  if (kind == ModelKind::dKMP) spin_ = 0.5;
}

std::vector<std::string> ModelSpec::warnings() const {
  std::vector<std::string> out;
  if (kind_ == ModelKind::Harm && spin_ < 0.5) {
    out.push_back(fmt::format(
        "Harm with spin {} < 1/2: attractiveness is not established for this range", spin_));
  }
  return out;
}

double diffusion_coefficient(const ModelSpec& spec) noexcept {
  return spec.kind() == ModelKind::Harm ? 1.0 / spec.two_s() : 0.5;
}

double redistribution_weight(double s, double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::domain_error(fmt::format("redistribution weight needs u in (0,1), got {}", u));
  }
  return redistribution_weight(s, u, 1.0 - u);
}

double redistribution_weight(double s, double u, double one_minus_u) {
  // u may round to 1 while the separately supplied 1 - u is still positive.
  if (!(u > 0.0 && u <= 1.0) || !(one_minus_u > 0.0 && one_minus_u <= 1.0)) {
    throw std::domain_error(fmt::format("redistribution weight needs u in (0,1), got {}", u));
  }
  const double a = 2.0 * s;
  const double log_norm = log_gamma(2.0 * a) - 2.0 * log_gamma(a);
  return std::exp(log_norm + (a - 1.0) * (std::log(u) + std::log(one_minus_u)));
}

std::pair<double, double> apply_gkmp_exchange(double eta_x, double eta_y, double u) noexcept {
  const double sum = eta_x + eta_y;
  const double left = u * sum;
  return {left, sum - left};
}

std::pair<std::int64_t, std::int64_t> apply_dkmp_exchange(std::int64_t eta_x, std::int64_t eta_y,
                                                          std::int64_t r) {
  const std::int64_t sum = eta_x + eta_y;
  if (r < 0 || r > sum) {
    throw std::out_of_range(fmt::format("dKMP split r={} outside [0, {}]", r, sum));
  }
  return {r, sum - r};
}

double harm_rate(std::int64_t n, std::int64_t k, double s) {
  if (k < 1 || k > n) return 0.0;
  const double a = 2.0 * s;
  const auto nd = static_cast<double>(n);
  const auto kd = static_cast<double>(k);
  const double log_ratio =
      log_gamma(nd + 1.0) + log_gamma(nd - kd + a) - log_gamma(nd - kd + 1.0) - log_gamma(nd + a);
  return std::exp(log_ratio) / kd;
}

double harm_total_rate(std::int64_t n, double s) {
  double acc = 0.0;
  for (std::int64_t k = 1; k <= n; ++k) acc += harm_rate(n, k, s);
  return acc;
}

const std::vector<double>& HarmRateTable::row(std::int64_t n) {
  const auto idx = static_cast<std::size_t>(n);
  if (idx >= rows_.size()) {
    rows_.resize(idx + 1);
    filled_.resize(idx + 1, false);
  }
  if (!filled_[idx]) {
    auto& r = rows_[idx];
    r.assign(idx + 1, 0.0);
    for (std::int64_t k = 1; k <= n; ++k) {
      r[static_cast<std::size_t>(k)] = r[static_cast<std::size_t>(k - 1)] + harm_rate(n, k, s_);
    }
    filled_[idx] = true;
  }
  return rows_[idx];
}

double HarmRateTable::total(std::int64_t n) {
  if (n <= 0) return 0.0;
  return row(n).back();
}

double HarmRateTable::cumulative(std::int64_t n, std::int64_t j) {
  if (n <= 0 || j <= 0) return 0.0;
  const auto& r = row(n);
  return r[static_cast<std::size_t>(std::min(j, n))];
}

std::int64_t HarmRateTable::select(std::int64_t n, double target) {
  const auto& r = row(n);
  const auto it = std::upper_bound(r.begin() + 1, r.end(), target);
  if (it == r.end()) return n;  // target rounded up to the total
  return static_cast<std::int64_t>(it - r.begin());
}

namespace detail {

std::int64_t require_integer(double v) {
  if (!(v >= 0.0) || v != std::floor(v)) {
    throw std::invalid_argument(
        fmt::format("particle model needs non-negative integer occupations, got {}", v));
  }
  return static_cast<std::int64_t>(v);
}

}  // namespace detail

namespace {

void require_matching_config(const ModelSpec& spec, const Configuration& config) {
  const bool energy = kind_of(config) == ConfigKind::energy;
  if (energy == spec.is_particle_model()) {
    throw std::invalid_argument(fmt::format("{} needs a {} configuration", to_string(spec.kind()),
                                            spec.is_particle_model() ? "particle" : "energy"));
  }
}

}  // namespace

double generator_eta(const ModelSpec& spec, const Configuration& config, std::size_t x) {
  const Torus torus(size_of(config));
  const double left = value_at(config, torus.neighbor(x, -1));
  const double right = value_at(config, torus.neighbor(x, +1));
  return diffusion_coefficient(spec) * (right + left - 2.0 * value_at(config, x));
}

double generator_eta_kernel(const ModelSpec& spec, const Configuration& config, std::size_t x) {
  require_matching_config(spec, config);
  const Torus torus(size_of(config));
  const double here = value_at(config, x);
  const double left = value_at(config, torus.neighbor(x, -1));
  const double right = value_at(config, torus.neighbor(x, +1));
  // x is the left end of bond (x, x+1) and the right end of bond (x-1, x).
  const double as_left = bond_generator(spec, here, right, [](double a, double) { return a; });
  const double as_right = bond_generator(spec, left, here, [](double, double b) { return b; });
  return as_left + as_right;
}

double beta_second_moment_gap(double s) noexcept { return s / (4.0 * s + 1.0); }

double generator_product(const ModelSpec& spec, double eta_x, double eta_y) noexcept {
  switch (spec.kind()) {
    case ModelKind::gKMP: {
      const double sum = eta_x + eta_y;
      return sum * sum * beta_second_moment_gap(spec.spin()) - eta_x * eta_y;
    }
    case ModelKind::dKMP:
      return (eta_x * eta_x + eta_y * eta_y) / 6.0 - (2.0 / 3.0) * eta_x * eta_y -
             (eta_x + eta_y) / 6.0;
    case ModelKind::Harm: {
      const double a = spec.two_s();
      const double diff = eta_x - eta_y;
      return diff * diff / a -
             (eta_x * eta_x + eta_y * eta_y + a * eta_x + a * eta_y) / (a * (a + 1.0));
    }
  }
  return 0.0;
}

double generator_product_kernel(const ModelSpec& spec, double eta_x, double eta_y) {
  return bond_generator(spec, eta_x, eta_y, [](double a, double b) { return a * b; });
}

double instantaneous_current(const ModelSpec& spec, const Configuration& config, std::size_t x) {
  const Torus torus(size_of(config));
  return diffusion_coefficient(spec) * (value_at(config, torus.neighbor(x, +1)) - value_at(config, x));
}

double bond_fluctuation(const ModelSpec& spec, double eta_x, double eta_y) noexcept {
  const double diff = eta_x - eta_y;
  return diffusion_coefficient(spec) * diff * diff - generator_product(spec, eta_x, eta_y);
}

}  // namespace gradspin
