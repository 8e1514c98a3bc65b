#include "gradspin/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

namespace gradspin {

void validate(const InvariantSpec& spec) {
  if (!(spec.rho > 0.0) || !std::isfinite(spec.rho)) {
    throw std::invalid_argument(fmt::format("rho must be positive, got {}", spec.rho));
  }
}

namespace {

double sample_marginal(const ModelSpec& model, double rho, RngStream& rng) {
  switch (model.kind()) {
    case ModelKind::gKMP: return sample_gamma(model.two_s(), rho, rng);
    case ModelKind::dKMP: return static_cast<double>(sample_geometric_mean(rho, rng));
    case ModelKind::Harm: return static_cast<double>(sample_negative_binomial(model.two_s(), rho, rng));
  }
  return 0.0;
}

/// Inverse CDF of the invariant marginal at level u in (0, 1).
double marginal_quantile(const ModelSpec& model, double rho, double u) {
  switch (model.kind()) {
    case ModelKind::gKMP: return gamma_quantile(model.two_s(), rho, u);
    case ModelKind::dKMP: return static_cast<double>(geometric_quantile(rho, u));
    case ModelKind::Harm: return static_cast<double>(negative_binomial_quantile(model.two_s(), rho, u));
  }
  return 0.0;
}

double marginal_cdf(const ModelSpec& model, double rho, double x) {
  switch (model.kind()) {
    case ModelKind::gKMP: return gamma_cdf(model.two_s(), rho, x);
    case ModelKind::dKMP:
      return 1.0 - std::pow(rho / (1.0 + rho), std::floor(x) + 1.0);
    case ModelKind::Harm:
      return negative_binomial_cdf(model.two_s(), rho, static_cast<std::int64_t>(std::floor(x)));
  }
  return 0.0;
}

Configuration make_config(const ModelSpec& model, const std::vector<double>& values) {
  if (!model.is_particle_model()) return EnergyConfig{values};
  ParticleConfig p;
  p.values.reserve(values.size());
  for (double v : values) p.values.push_back(static_cast<std::int64_t>(v));
  return p;
}

}  // namespace

Configuration sample_invariant(const InvariantSpec& spec, std::size_t n, RngStream& rng) {
  validate(spec);
  std::vector<double> values(n);
  for (auto& v : values) v = sample_marginal(spec.model, spec.rho, rng);
  return make_config(spec.model, values);
}

double marginal_mean(const ModelSpec& model, double rho) noexcept {
  return model.kind() == ModelKind::dKMP ? rho : model.two_s() * rho;
}

Moment moment(const InvariantSpec& spec, int m) {
  validate(spec);
  if (m < 1) throw std::invalid_argument(fmt::format("moment order must be >= 1, got {}", m));
  const double md = m;
  const double rho_m = std::pow(spec.rho, md);
  switch (spec.model.kind()) {
    case ModelKind::gKMP: {
      const double a = spec.model.two_s();
      return {rho_m * std::exp(log_gamma(a + md) - log_gamma(a)), MomentKind::raw};
    }
    case ModelKind::dKMP: return {rho_m * std::tgamma(md + 1.0), MomentKind::factorial};
    case ModelKind::Harm: {
      const double a = spec.model.two_s();
      return {rho_m * std::exp(log_gamma(a + md) - log_gamma(a)), MomentKind::factorial};
    }
  }
  return {0.0, MomentKind::raw};
}

// ---------------------------------------------------------------------------

Profile::Profile(Kind kind, std::vector<double> params, std::vector<std::pair<double, double>> points)
    : kind_(kind), params_(std::move(params)), points_(std::move(points)) {}

Profile Profile::constant(double c) {
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw std::invalid_argument(fmt::format("profile: constant must be finite and >= 0, got {}", c));
  }
  Profile p(Kind::constant, {c}, {});
  p.sup_ = p.inf_ = c;
  return p;
}

Profile Profile::sine(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(a > std::abs(b))) {
    throw std::invalid_argument(fmt::format("profile: sine needs a > |b|, got a={} b={}", a, b));
  }
  Profile p(Kind::sine, {a, b}, {});
  p.sup_ = a + std::abs(b);
  p.inf_ = a - std::abs(b);
  return p;
}

Profile Profile::step(double c1, double c2, double u_star) {
  if (!(c1 >= 0.0) || !(c2 >= 0.0) || !std::isfinite(c1) || !std::isfinite(c2)) {
    throw std::invalid_argument("profile: step levels must be finite and >= 0");
  }
  if (!(u_star > 0.0 && u_star < 1.0)) {
    throw std::invalid_argument(fmt::format("profile: step position must lie in (0,1), got {}", u_star));
  }
  Profile p(Kind::step, {c1, c2, u_star}, {});
  p.sup_ = std::max(c1, c2);
  p.inf_ = std::min(c1, c2);
  return p;
}

Profile Profile::table(std::vector<std::pair<double, double>> points) {
  if (points.empty()) throw std::invalid_argument("profile: table is empty");
  for (auto& [u, v] : points) {
    if (!std::isfinite(u) || !std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument(fmt::format("profile: bad table row ({}, {})", u, v));
    }
    u -= std::floor(u);
  }
  std::sort(points.begin(), points.end());
  Profile p(Kind::table, {}, std::move(points));
  p.sup_ = p.inf_ = p.points_.front().second;
  for (const auto& [u, v] : p.points_) {
    p.sup_ = std::max(p.sup_, v);
    p.inf_ = std::min(p.inf_, v);
  }
  return p;
}

namespace {

std::vector<double> parse_numbers(std::string_view text, std::string_view preset) {
  std::vector<double> out;
  std::string buf(text);
  std::stringstream ss(buf);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size()) {
      throw std::invalid_argument(fmt::format("profile: cannot parse number '{}' in '{}'", item, preset));
    }
    out.push_back(v);
  }
  return out;
}

std::vector<std::pair<double, double>> read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("profile: cannot open table '{}'", path));
  std::vector<std::pair<double, double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    const std::string a = line.substr(0, comma);
    const std::string b = comma == std::string::npos ? "" : line.substr(comma + 1);
    char* ea = nullptr;
    char* eb = nullptr;
    const double u = std::strtod(a.c_str(), &ea);
    const double v = std::strtod(b.c_str(), &eb);
    const bool ok = !a.empty() && !b.empty() && ea == a.c_str() + a.size() && eb == b.c_str() + b.size();
    if (!ok) {
      if (first) {  // header row
        first = false;
        continue;
      }
      throw std::invalid_argument(fmt::format("profile: malformed table row '{}' in '{}'", line, path));
    }
    first = false;
    rows.emplace_back(u, v);
  }
  return rows;
}

}  // namespace

Profile Profile::parse(std::string_view preset) {
  const auto colon = preset.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument(fmt::format("profile: '{}' is not of the form name:args", preset));
  }
  const std::string_view name = preset.substr(0, colon);
  const std::string_view args = preset.substr(colon + 1);
  if (name == "table") return table(read_table(std::string(args)));
  const auto nums = parse_numbers(args, preset);
  const auto need = [&](std::size_t k) {
    if (nums.size() != k) {
      throw std::invalid_argument(
          fmt::format("profile: '{}' expects {} parameter(s), got {}", name, k, nums.size()));
    }
  };
  if (name == "const") {
    need(1);
    return constant(nums[0]);
  }
  if (name == "sine") {
    need(2);
    return sine(nums[0], nums[1]);
  }
  if (name == "step") {
    need(3);
    return step(nums[0], nums[1], nums[2]);
  }
  throw std::invalid_argument(fmt::format("profile: unknown preset '{}'", name));
}

std::string Profile::name() const {
  switch (kind_) {
    case Kind::constant: return fmt::format("const:{}", params_[0]);
    case Kind::sine: return fmt::format("sine:{},{}", params_[0], params_[1]);
    case Kind::step: return fmt::format("step:{},{},{}", params_[0], params_[1], params_[2]);
    case Kind::table: return fmt::format("table[{} points]", points_.size());
  }
  return "?";
}

double Profile::operator()(double u) const {
  u -= std::floor(u);
  switch (kind_) {
    case Kind::constant: return params_[0];
    case Kind::sine: return params_[0] + params_[1] * std::sin(2.0 * std::numbers::pi * u);
    case Kind::step: return u < params_[2] ? params_[0] : params_[1];
    case Kind::table: {
      const auto it = std::lower_bound(points_.begin(), points_.end(), u,
                                       [](const auto& p, double v) { return p.first < v; });
      // Candidates: the neighbours on either side, wrapping around the torus.
      const auto& after = it == points_.end() ? points_.front() : *it;
      const auto& before = it == points_.begin() ? points_.back() : *(it - 1);
      const auto dist = [u](double p) {
        const double d = std::abs(u - p);
        return std::min(d, 1.0 - d);
      };
      return dist(before.first) <= dist(after.first) ? before.second : after.second;
    }
  }
  return 0.0;
}

std::vector<double> Profile::grid(std::size_t n) const {
  std::vector<double> g(n);
  for (std::size_t x = 0; x < n; ++x) g[x] = (*this)(static_cast<double>(x) / static_cast<double>(n));
  return g;
}

// ---------------------------------------------------------------------------

double local_parameter(const ModelSpec& model, double density) noexcept {
  return model.kind() == ModelKind::dKMP ? density : density / model.two_s();
}

Configuration sample_profile_measure(const ModelSpec& model, const Profile& profile, std::size_t n,
                                     RngStream& rng) {
  const auto density = profile.grid(n);
  std::vector<double> values(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    if (density[x] > 0.0) values[x] = sample_marginal(model, local_parameter(model, density[x]), rng);
  }
  return make_config(model, values);
}

void check_domination(const InitialMeasureSpec& spec, std::size_t n) {
  if (!(spec.rho_hat > 0.0) || !std::isfinite(spec.rho_hat)) {
    throw std::invalid_argument(fmt::format("rho_hat must be positive, got {}", spec.rho_hat));
  }
  const auto& model = spec.model;
  const auto density = spec.profile.grid(n);

  // Comparison points: the dominating law's quantiles (gKMP) or every integer
  // up to a far quantile (particle models).
  std::vector<double> points;
  if (model.is_particle_model()) {
    const double top = marginal_quantile(model, spec.rho_hat, 1.0 - 1e-10);
    for (double k = 0.0; k <= top; k += 1.0) points.push_back(k);
  } else {
    for (int i = 1; i < 64; ++i) points.push_back(marginal_quantile(model, spec.rho_hat, i / 64.0));
  }
  std::vector<double> hat_cdf;
  hat_cdf.reserve(points.size());
  for (double p : points) hat_cdf.push_back(marginal_cdf(model, spec.rho_hat, p));

  std::vector<double> checked;
  for (std::size_t x = 0; x < n; ++x) {
    if (density[x] <= 0.0) continue;
    const double rho = local_parameter(model, density[x]);
    if (std::find(checked.begin(), checked.end(), rho) != checked.end()) continue;
    checked.push_back(rho);
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (marginal_cdf(model, rho, points[i]) < hat_cdf[i] - 1e-12) {
        throw DominationError(fmt::format(
            "site {} (density {}) is not dominated by rho_hat = {}: CDFs cross at {}", x,
            density[x], spec.rho_hat, points[i]));
      }
    }
  }
}

std::pair<Configuration, Configuration> sample_dominated_pair(const InitialMeasureSpec& spec,
                                                              std::size_t n, RngStream& rng) {
  check_domination(spec, n);
  const auto& model = spec.model;
  const auto density = spec.profile.grid(n);
  std::vector<double> low(n, 0.0);
  std::vector<double> high(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    const double u = rng.uniform_open();
    high[x] = marginal_quantile(model, spec.rho_hat, u);
    if (density[x] > 0.0) low[x] = marginal_quantile(model, local_parameter(model, density[x]), u);
    if (low[x] > high[x]) {
      throw std::logic_error(fmt::format("coupled quantiles out of order at site {}", x));
    }
  }
  return {make_config(model, low), make_config(model, high)};
}

}  // namespace gradspin
