#include "gradspin/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

namespace gradspin {

// ---------------------------------------------------------------------------
// Criterion.
// ---------------------------------------------------------------------------

void validate(const OrderedLocalPair& p) {
  if (p.alpha < 0 || p.beta < 0 || p.alpha > p.gamma || p.beta > p.delta) {
    throw std::invalid_argument(fmt::format(
        "ordered pair needs 0 <= alpha <= gamma and 0 <= beta <= delta, got ({},{},{},{})", p.alpha,
        p.beta, p.gamma, p.delta));
  }
}

namespace {

void require_particle_model(const ModelSpec& spec) {
  if (!spec.is_particle_model()) {
    throw std::invalid_argument("the rate criterion applies to dKMP and Harm only");
  }
}

double jump_rate(const ModelSpec& spec, std::int64_t n_from, std::int64_t n_partner, std::int64_t k) {
  if (k < 1 || k > n_from) return 0.0;
  if (spec.kind() == ModelKind::dKMP) return 1.0 / static_cast<double>(n_from + n_partner + 1);
  return harm_rate(n_from, k, spec.spin());
}

}  // namespace

double tail_rate_sum(const ModelSpec& spec, std::int64_t n_from, std::int64_t n_partner,
                     std::int64_t threshold) {
  require_particle_model(spec);
  if (threshold < -1) throw std::invalid_argument("tail_rate_sum: threshold must be >= -1");
  if (n_from < 0 || n_partner < 0) throw std::invalid_argument("tail_rate_sum: negative occupation");
  // Summed from the top so that it matches the suffix tables of the scan.
  double acc = 0.0;
  for (std::int64_t k = n_from; k > threshold && k >= 1; --k) acc += jump_rate(spec, n_from, n_partner, k);
  return acc;
}

std::string_view to_string(Inequality which) noexcept {
  return which == Inequality::att1 ? "att1" : "att2";
}

namespace {

CriterionCheck make_check(Inequality which, const OrderedLocalPair& pair, std::int64_t index,
                          double lhs, double rhs) {
  CriterionCheck c;
  c.which = which;
  c.pair = pair;
  c.index = index;
  c.lhs = lhs;
  c.rhs = rhs;
  c.margin = which == Inequality::att1 ? rhs - lhs : lhs - rhs;
  c.passed = c.margin >= -kCriterionTolerance;
  return c;
}

}  // namespace

CriterionCheck check_att1(const ModelSpec& spec, const OrderedLocalPair& pair, std::int64_t l) {
  validate(pair);
  if (l < 0) throw std::invalid_argument("att1: l must be >= 0");
  const double lhs = tail_rate_sum(spec, pair.alpha, pair.beta, pair.delta - pair.beta + l);
  const double rhs = tail_rate_sum(spec, pair.gamma, pair.delta, l);
  return make_check(Inequality::att1, pair, l, lhs, rhs);
}

CriterionCheck check_att2(const ModelSpec& spec, const OrderedLocalPair& pair, std::int64_t k) {
  validate(pair);
  if (k < 0) throw std::invalid_argument("att2: k must be >= 0");
  const double lhs = tail_rate_sum(spec, pair.alpha, pair.beta, k);
  const double rhs = tail_rate_sum(spec, pair.gamma, pair.delta, pair.gamma - pair.alpha + k);
  return make_check(Inequality::att2, pair, k, lhs, rhs);
}

namespace {

/// tail(n, p, t) = sum_{k' > t} c^{k'} for n, p <= n_max and t >= 0, stored
/// as suffix sums. For Harm the partner index is ignored.
class TailTable {
public:
  TailTable(const ModelSpec& spec, std::int64_t n_max)
      : n_max_(n_max), partners_(spec.kind() == ModelKind::dKMP ? n_max + 1 : 1) {
    const auto stride = static_cast<std::size_t>(n_max + 1);
    data_.assign(stride * stride * static_cast<std::size_t>(partners_), 0.0);
    for (std::int64_t n = 0; n <= n_max; ++n) {
      for (std::int64_t p = 0; p < partners_; ++p) {
        double acc = 0.0;
        for (std::int64_t t = n - 1; t >= 0; --t) {
          acc += jump_rate(spec, n, p, t + 1);
          data_[offset(n, p) + static_cast<std::size_t>(t)] = acc;
        }
      }
    }
  }

  double operator()(std::int64_t n, std::int64_t p, std::int64_t t) const {
    if (t >= n) return 0.0;
    return data_[offset(n, partners_ == 1 ? 0 : p) + static_cast<std::size_t>(t)];
  }

private:
  std::size_t offset(std::int64_t n, std::int64_t p) const {
    const auto stride = static_cast<std::size_t>(n_max_ + 1);
    return (static_cast<std::size_t>(n) * static_cast<std::size_t>(partners_) +
            static_cast<std::size_t>(p)) *
           stride;
  }

  std::int64_t n_max_;
  std::int64_t partners_;
  std::vector<double> data_;
};

struct PartialScan {
  std::uint64_t checks = 0;
  std::uint64_t violation_count = 0;
  std::vector<CriterionCheck> violations;
  CriterionCheck worst;
  bool has_worst = false;
};

void record(PartialScan& part, const CriterionCheck& c, std::size_t max_listed) {
  ++part.checks;
  if (!part.has_worst || c.margin < part.worst.margin) {
    part.worst = c;
    part.has_worst = true;
  }
  if (!c.passed) {
    ++part.violation_count;
    if (part.violations.size() < max_listed) part.violations.push_back(c);
  }
}

}  // namespace

CriterionReport scan_criterion(const ModelSpec& spec, std::int64_t n_max, std::int64_t l_max,
                               std::size_t max_listed, Execution mode) {
  require_particle_model(spec);
  if (n_max < 1 || l_max < 1) throw std::invalid_argument("scan bounds must be >= 1");
  const TailTable tail(spec, n_max);

  std::vector<PartialScan> parts(static_cast<std::size_t>(n_max + 1));
  const auto scan_alpha = [&](std::int64_t alpha) {
    PartialScan& part = parts[static_cast<std::size_t>(alpha)];
    for (std::int64_t gamma = alpha; gamma <= n_max; ++gamma) {
      for (std::int64_t beta = 0; beta <= n_max; ++beta) {
        for (std::int64_t delta = beta; delta <= n_max; ++delta) {
          const OrderedLocalPair pair{alpha, beta, gamma, delta};
          for (std::int64_t l = 0; l <= l_max; ++l) {
            const double lhs = tail(alpha, beta, delta - beta + l);
            const double rhs = tail(gamma, delta, l);
            const double margin = rhs - lhs;
            // Only materialise the record when it matters.
            if (margin < -kCriterionTolerance || !part.has_worst || margin < part.worst.margin) {
              record(part, make_check(Inequality::att1, pair, l, lhs, rhs), max_listed);
            } else {
              ++part.checks;
            }
          }
          for (std::int64_t k = 0; k <= l_max; ++k) {
            const double lhs = tail(alpha, beta, k);
            const double rhs = tail(gamma, delta, gamma - alpha + k);
            const double margin = lhs - rhs;
            if (margin < -kCriterionTolerance || !part.has_worst || margin < part.worst.margin) {
              record(part, make_check(Inequality::att2, pair, k, lhs, rhs), max_listed);
            } else {
              ++part.checks;
            }
          }
        }
      }
    }
  };
  if (mode == Execution::serial) {
    for (std::int64_t alpha = 0; alpha <= n_max; ++alpha) scan_alpha(alpha);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t alpha = 0; alpha <= n_max; ++alpha) scan_alpha(alpha);
  }

  CriterionReport report;
  report.model = spec.kind();
  report.spin = spec.spin();
  report.n_max = n_max;
  report.l_max = l_max;
  report.report_only = spec.kind() == ModelKind::Harm && spec.two_s() < 1.0;
  bool has_worst = false;
  for (const auto& part : parts) {
    report.checks += part.checks;
    report.violation_count += part.violation_count;
    for (const auto& v : part.violations) {
      if (report.violations.size() < max_listed) report.violations.push_back(v);
    }
    if (part.has_worst && (!has_worst || part.worst.margin < report.worst.margin)) {
      report.worst = part.worst;
      has_worst = true;
    }
  }
  return report;
}

namespace {

nlohmann::json to_json(const CriterionCheck& c) {
  return {{"inequality", std::string(to_string(c.which))},
          {"alpha", c.pair.alpha},
          {"beta", c.pair.beta},
          {"gamma", c.pair.gamma},
          {"delta", c.pair.delta},
          {"index", c.index},
          {"lhs", c.lhs},
          {"rhs", c.rhs},
          {"margin", c.margin}};
}

}  // namespace

nlohmann::json to_json(const CriterionReport& r) {
  nlohmann::json violations = nlohmann::json::array();
  for (const auto& v : r.violations) violations.push_back(to_json(v));
  return {{"model", std::string(to_string(r.model))},
          {"spin", r.spin},
          {"n_max", r.n_max},
          {"l_max", r.l_max},
          {"checks", r.checks},
          {"violation_count", r.violation_count},
          {"passed", r.passed()},
          {"report_only", r.report_only},
          {"worst", to_json(r.worst)},
          {"violations", violations}};
}

std::string violations_csv(const CriterionReport& r) {
  std::string out = "inequality,alpha,beta,gamma,delta,index,lhs,rhs,margin\n";
  for (const auto& v : r.violations) {
    out += fmt::format("{},{},{},{},{},{},{:.17g},{:.17g},{:.17g}\n", to_string(v.which),
                       v.pair.alpha, v.pair.beta, v.pair.gamma, v.pair.delta, v.index, v.lhs, v.rhs,
                       v.margin);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Basic coupling.
// ---------------------------------------------------------------------------

CouplingReport basic_coupling_gkmp(const ModelSpec& spec, const EnergyConfig& eta0,
                                   const EnergyConfig& xi0, double micro_t, RngStream& rng) {
  if (spec.kind() != ModelKind::gKMP) throw std::invalid_argument("basic coupling is for gKMP");
  const std::size_t n = eta0.values.size();
  if (n < 2 || xi0.values.size() != n) throw std::invalid_argument("coupled configurations need equal size >= 2");
  validate(Configuration{eta0});
  validate(Configuration{xi0});
  for (std::size_t x = 0; x < n; ++x) {
    if (eta0.values[x] > xi0.values[x]) {
      throw std::invalid_argument(fmt::format("initial pair not ordered at site {}", x));
    }
  }
  if (!(micro_t >= 0.0)) throw std::invalid_argument("micro time must be >= 0");

  CouplingReport rep;
  rep.lower = eta0;
  rep.upper = xi0;
  rep.identical = eta0.values == xi0.values;
  rep.max_excess = -std::numeric_limits<double>::infinity();
  auto& eta = rep.lower.values;
  auto& xi = rep.upper.values;
  for (std::size_t x = 0; x < n; ++x) rep.max_excess = std::max(rep.max_excess, eta[x] - xi[x]);

  const double a = spec.two_s();
  const double total_rate = static_cast<double>(n);
  const double eps = std::numeric_limits<double>::epsilon();
  double t = 0.0;
  for (;;) {
    t += rng.exponential() / total_rate;
    if (t > micro_t) break;
    const std::size_t x = rng.uniform_index(n);
    const std::size_t y = x + 1 == n ? 0 : x + 1;
    const double u = sample_beta(a, a, rng);
    std::tie(eta[x], eta[y]) = apply_gkmp_exchange(eta[x], eta[y], u);
    std::tie(xi[x], xi[y]) = apply_gkmp_exchange(xi[x], xi[y], u);
    ++rep.events;
    const double slack = 4.0 * eps * (xi[x] + xi[y]);
    for (std::size_t z : {x, y}) {
      const double excess = eta[z] - xi[z];
      rep.max_excess = std::max(rep.max_excess, excess);
      if (excess > slack) ++rep.violations;
    }
    if (rep.identical && (eta[x] != xi[x] || eta[y] != xi[y])) rep.identical = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Statistics helpers.
// ---------------------------------------------------------------------------

namespace {

struct Stats {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double se = 0.0;
};

Stats summarize(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  double acc = 0.0;
  for (double x : v) acc += x;
  s.mean = acc / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.variance = ss / static_cast<double>(v.size() - 1);
    s.se = std::sqrt(s.variance / static_cast<double>(v.size()));
  }
  return s;
}

double sum_of(const Configuration& c) { return total_mass(c); }

double sum_sq_of(const Configuration& c) {
  double acc = 0.0;
  for (double v : as_doubles(c)) acc += v * v;
  return acc;
}

}  // namespace

DominationReport monotone_domination_mc(const InitialMeasureSpec& spec, std::size_t n,
                                        double macro_t, std::size_t replicas, std::uint64_t seed,
                                        Execution mode) {
  if (replicas == 0) throw std::invalid_argument("replicas must be at least 1");
  if (!(macro_t >= 0.0) || !std::isfinite(macro_t)) throw std::invalid_argument("t must be finite and >= 0");
  check_domination(spec, n);

  std::vector<double> f_sum(replicas), f_sq(replicas), g_sum(replicas), g_sq(replicas);
  std::vector<std::string> errors(replicas);
  const double target = macro_t * static_cast<double>(n) * static_cast<double>(n);
  const auto body = [&](std::size_t r) {
    try {
      RngStream rng(seed, r);
      auto [eta0, xi0] = sample_dominated_pair(spec, n, rng);
      g_sum[r] = sum_of(xi0);
      g_sq[r] = sum_sq_of(xi0);
      Simulation sim(spec.model, std::move(eta0), std::move(rng));
      sim.advance_to(target);
      f_sum[r] = sum_of(sim.configuration());
      f_sq[r] = sum_sq_of(sim.configuration());
    } catch (const std::exception& e) {
      errors[r] = e.what();
    }
  };
  if (mode == Execution::serial) {
    for (std::size_t r = 0; r < replicas; ++r) body(r);
  } else {
    const auto count = static_cast<std::int64_t>(replicas);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t r = 0; r < count; ++r) body(static_cast<std::size_t>(r));
  }
  for (std::size_t r = 0; r < replicas; ++r) {
    if (!errors[r].empty()) throw std::runtime_error(fmt::format("replica {}: {}", r, errors[r]));
  }

  const InvariantSpec inv{spec.model, spec.rho_hat};
  const double m1 = marginal_mean(spec.model, spec.rho_hat);
  const Moment second_raw_or_factorial = moment(inv, 2);
  // Raw second moment from the factorial one for the particle models.
  const double m2 = second_raw_or_factorial.kind == MomentKind::raw
                        ? second_raw_or_factorial.value
                        : second_raw_or_factorial.value + m1;
  const double nd = static_cast<double>(n);

  DominationReport rep;
  rep.replicas = replicas;
  const auto estimate = [&](std::string name, const std::vector<double>& f,
                            const std::vector<double>& g, double exact) {
    DominationEstimate e;
    e.observable = std::move(name);
    const Stats sf = summarize(f);
    const Stats sg = summarize(g);
    std::vector<double> diff(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) diff[i] = f[i] - g[i];
    const Stats sd = summarize(diff);
    e.mean_evolved = sf.mean;
    e.se_evolved = sf.se;
    e.mean_invariant = sg.mean;
    e.se_invariant = sg.se;
    e.exact_invariant = exact;
    e.mean_difference = sd.mean;
    e.se_difference = sd.se;
    e.ordered = sd.mean <= 4.0 * sd.se;
    return e;
  };
  rep.estimates.push_back(estimate("sum", f_sum, g_sum, nd * m1));
  rep.estimates.push_back(estimate("sum_sq", f_sq, g_sq, nd * m2));
  return rep;
}

// ---------------------------------------------------------------------------
// Carre du champ and Dynkin martingale.
// ---------------------------------------------------------------------------

namespace {

template <class Fluct>
double upsilon(const Configuration& config, const std::vector<double>& g, Fluct&& fluct) {
  const std::size_t n = size_of(config);
  if (g.size() != n) throw std::invalid_argument("test function grid size differs from N");
  const double nd = static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    const std::size_t y = x + 1 == n ? 0 : x + 1;
    const double grad = nd * (g[y] - g[x]);
    acc += grad * grad * fluct(value_at(config, x), value_at(config, y));
  }
  return acc / (nd * nd);
}

}  // namespace

double carre_du_champ(const ModelSpec& spec, const Configuration& config,
                      const std::vector<double>& g_grid) {
  return upsilon(config, g_grid, [&](double a, double b) { return bond_fluctuation(spec, a, b); });
}

double carre_du_champ_kernel(const ModelSpec& spec, const Configuration& config,
                             const std::vector<double>& g_grid) {
  const double d = diffusion_coefficient(spec);
  return upsilon(config, g_grid, [&](double a, double b) {
    return d * (a - b) * (a - b) - generator_product_kernel(spec, a, b);
  });
}

MartingaleSummary dynkin_diagnostics(const ModelSpec& spec, const InitialSampler& initial,
                                     const TestFunction& g, double macro_t, std::size_t replicas,
                                     std::uint64_t seed, Execution mode) {
  ReplicaJob job{spec, initial, {}, seed};
  job.plan.macro_times = {macro_t};
  job.plan.record_mass = false;
  job.plan.martingale = g;
  const auto results = run_replicas(job, replicas, mode);

  MartingaleSummary s;
  s.test_function = g.id();
  s.t = macro_t;
  s.replicas = replicas;
  for (const auto& r : results) {
    if (!r.ok()) {
      ++s.failed_replicas;
      continue;
    }
    s.martingale.push_back(r.observations.back().martingale);
    s.quadratic_variation.push_back(r.observations.back().quadratic_variation);
  }
  const Stats sm = summarize(s.martingale);
  const Stats sq = summarize(s.quadratic_variation);
  s.mean = sm.mean;
  s.se = sm.se;
  s.variance = sm.variance;
  s.mean_qv = sq.mean;
  s.se_qv = sq.se;
  s.ratio = sq.mean > 0.0 ? sm.variance / sq.mean : std::numeric_limits<double>::quiet_NaN();
  for (double m : s.martingale) s.sup_abs = std::max(s.sup_abs, std::abs(m));
  return s;
}

nlohmann::json to_json(const MartingaleSummary& s, bool with_samples) {
  nlohmann::json j = {{"test_function", s.test_function},
                      {"t", s.t},
                      {"replicas", s.replicas},
                      {"failed_replicas", s.failed_replicas},
                      {"mean", s.mean},
                      {"se", s.se},
                      {"variance", s.variance},
                      {"mean_quadratic_variation", s.mean_qv},
                      {"se_quadratic_variation", s.se_qv},
                      {"ratio", s.ratio},
                      {"sup_abs", s.sup_abs}};
  if (with_samples) {
    j["martingale"] = s.martingale;
    j["quadratic_variation"] = s.quadratic_variation;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Identity suites.
// ---------------------------------------------------------------------------

namespace {

std::vector<ModelSpec> suite_models(std::initializer_list<double> spins) {
  std::vector<ModelSpec> out;
  for (double s : spins) out.emplace_back(ModelKind::gKMP, s);
  out.emplace_back(ModelKind::dKMP, 0.5);
  for (double s : spins) out.emplace_back(ModelKind::Harm, s);
  return out;
}

Configuration random_config(const ModelSpec& spec, std::size_t n, double bound, RngStream& rng) {
  if (spec.is_particle_model()) {
    ParticleConfig p;
    for (std::size_t x = 0; x < n; ++x) {
      p.values.push_back(static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(bound) + 1)));
    }
    return p;
  }
  EnergyConfig e;
  for (std::size_t x = 0; x < n; ++x) e.values.push_back(bound * rng.uniform());
  return e;
}

void note(SuiteResult& r, double residual) {
  ++r.cases;
  if (!(residual <= r.worst_residual)) r.worst_residual = residual;  // NaN propagates
}

void finish(SuiteResult& r) { r.passed = r.worst_residual <= r.tolerance; }

SuiteResult gradient_suite(const SuiteOptions& o) {
  SuiteResult r{"gradient", true, 0.0, 1e-9, 0};
  RngStream rng(o.seed, 1);
  const std::size_t n = 8;
  const double bound = static_cast<double>(std::min<std::int64_t>(o.n_max, 50));
  for (const auto& spec : suite_models({0.5, 1.0, 2.0})) {
    const double scale = o.corrupt_diffusion ? 1.01 : 1.0;
    for (std::size_t c = 0; c < o.random_cases; ++c) {
      const auto config = random_config(spec, n, bound, rng);
      for (std::size_t x = 0; x < n; ++x) {
        const double closed = scale * generator_eta(spec, config, x);
        note(r, std::abs(generator_eta_kernel(spec, config, x) - closed));
      }
    }
  }
  finish(r);
  return r;
}

SuiteResult beta_binomial_suite(const SuiteOptions& o) {
  SuiteResult r{"beta_binomial", true, 0.0, 1e-10, 0};
  for (double a : {0.5, 1.0, 1.7, 2.0, 4.0, 6.0}) {
    for (std::int64_t n = 1; n <= o.n_max; ++n) {
      double s1 = 0.0;
      double s2 = 0.0;
      double mass = 0.0;
      double mean = 0.0;
      for (std::int64_t k = 1; k <= n; ++k) {
        // k c^k(n) with 2s = a is the Gamma ratio of the identities.
        const double ratio = static_cast<double>(k) * harm_rate(n, k, a / 2.0);
        s1 += ratio;
        s2 += static_cast<double>(k) * ratio;
      }
      for (std::int64_t k = 0; k <= n; ++k) {
        const double p = beta_binomial_pmf(n, k, 1.0, a);
        mass += p;
        mean += static_cast<double>(k) * p;
      }
      const double nd = static_cast<double>(n);
      const double e1 = nd / a;
      const double e2 = (a + nd) * nd / (a * (a + 1.0));
      note(r, std::abs(s1 - e1) / e1);
      note(r, std::abs(s2 - e2) / e2);
      note(r, std::abs(mass - 1.0));
      note(r, std::abs(mean - nd / (1.0 + a)) / (nd / (1.0 + a)));
    }
  }
  finish(r);
  return r;
}

SuiteResult beta_second_moment_suite(const SuiteOptions&) {
  SuiteResult r{"beta_second_moment", true, 0.0, 1e-10, 0};
  for (double s : {0.25, 0.5, 1.0, 2.0, 5.0}) {
    const auto q = integrate_01(
        Integrand01([s](double u, double v) { return redistribution_weight(s, u, v) * u * v; }));
    note(r, std::abs(q.value - beta_second_moment_gap(s)));
  }
  finish(r);
  return r;
}

SuiteResult generator_product_suite(const SuiteOptions& o) {
  SuiteResult r{"generator_product", true, 0.0, 1e-8, 0};
  RngStream rng(o.seed, 2);
  const std::int64_t sum_max = std::min<std::int64_t>(o.n_max, 60);
  for (const auto& spec : suite_models({0.25, 0.5, 1.0, 2.0})) {
    if (spec.is_particle_model()) {
      for (std::int64_t x = 0; x <= sum_max; ++x) {
        for (std::int64_t y = 0; x + y <= sum_max; ++y) {
          const auto a = static_cast<double>(x);
          const auto b = static_cast<double>(y);
          note(r, std::abs(generator_product(spec, a, b) - generator_product_kernel(spec, a, b)));
        }
      }
    } else {
      for (std::size_t c = 0; c < o.random_cases; ++c) {
        const double a = 50.0 * rng.uniform();
        const double b = 50.0 * rng.uniform();
        note(r, std::abs(generator_product(spec, a, b) - generator_product_kernel(spec, a, b)));
      }
    }
  }
  finish(r);
  return r;
}

SuiteResult carre_du_champ_bound_suite(const SuiteOptions& o) {
  // Residual: amount by which the bound is exceeded, relative to its scale.
  SuiteResult r{"carre_du_champ_bound", true, 0.0, 1e-12, 0};
  RngStream rng(o.seed, 3);
  const std::int64_t grid = std::min<std::int64_t>(o.n_max, 100);
  const auto excess = [](double lhs, double rhs) {
    return std::max(0.0, lhs - rhs) / std::max(1.0, std::abs(rhs));
  };
  for (const auto& spec : suite_models({0.25, 0.5, 1.0, 2.0})) {
    const double d = diffusion_coefficient(spec);
    if (spec.is_particle_model()) {
      for (std::int64_t x = 0; x <= grid; ++x) {
        for (std::int64_t y = 0; y <= grid; ++y) {
          const auto a = static_cast<double>(x);
          const auto b = static_cast<double>(y);
          note(r, excess(bond_fluctuation(spec, a, b), d * (a * a + b * b)));
        }
      }
    } else {
      for (std::size_t c = 0; c < o.random_pairs; ++c) {
        const double a = 100.0 * rng.uniform();
        const double b = 100.0 * rng.uniform();
        note(r, excess(bond_fluctuation(spec, a, b), d * (a * a + b * b)));
      }
    }
    // Summed form: Upsilon <= (C/N^2) sum eta_x^2 with C = 2 D max (grad G)^2.
    const std::size_t n = 16;
    for (const auto& g : {TestFunction::cosine(1), TestFunction::sine(2), TestFunction::cosine(3)}) {
      const auto grid_g = g.grid(n);
      double max_grad_sq = 0.0;
      for (double v : g.forward_gradient_grid(n)) max_grad_sq = std::max(max_grad_sq, v * v);
      const double c = 2.0 * d * max_grad_sq;
      for (std::size_t k = 0; k < o.random_cases; ++k) {
        const auto config = random_config(spec, n, 50.0, rng);
        double sq = 0.0;
        for (double v : as_doubles(config)) sq += v * v;
        const double nd = static_cast<double>(n);
        note(r, excess(carre_du_champ(spec, config, grid_g), c * sq / (nd * nd)));
      }
    }
  }
  finish(r);
  return r;
}

}  // namespace

std::vector<SuiteResult> run_identity_suites(const SuiteOptions& options) {
  if (options.n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  return {gradient_suite(options), beta_binomial_suite(options), beta_second_moment_suite(options),
          generator_product_suite(options), carre_du_champ_bound_suite(options)};
}

nlohmann::json to_json(const SuiteResult& r) {
  return {{"name", r.name},
          {"passed", r.passed},
          {"worst_residual", r.worst_residual},
          {"tolerance", r.tolerance},
          {"cases", r.cases}};
}

}  // namespace gradspin
