#include "gradspin/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace gradspin {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

void require_matching_kind(const ModelSpec& spec, const Configuration& config) {
  const bool particle = kind_of(config) == ConfigKind::particle;
  if (particle != spec.is_particle_model()) {
    throw std::invalid_argument(fmt::format("{} needs a {} configuration", to_string(spec.kind()),
                                            spec.is_particle_model() ? "particle" : "energy"));
  }
}

}  // namespace

Simulation::Simulation(ModelSpec spec, Configuration initial, RngStream rng)
    : spec_(spec), config_(std::move(initial)), rng_(std::move(rng)) {
  validate(config_);
  require_matching_kind(spec_, config_);
  n_ = size_of(config_);
  if (n_ < 2) throw std::invalid_argument("N must be at least 2");
  if (spec_.kind() == ModelKind::Harm) {
    harm_.emplace(spec_.spin());
    index_ = RateIndex(2 * n_);
    for (std::size_t x = 0; x < n_; ++x) refresh_site(x);
    index_.rebuild();
  }
}

double Simulation::directional_rate(std::int64_t n) { return harm_->total(n); }

void Simulation::refresh_site(std::size_t x) {
  const auto& eta = std::get<ParticleConfig>(config_).values;
  const double w = directional_rate(eta[x]);
  index_.set(2 * x, w);
  index_.set(2 * x + 1, w);
}

double Simulation::total_rate() const {
  if (spec_.kind() == ModelKind::Harm) return index_.total();
  return static_cast<double>(n_);
}

double Simulation::draw_next_event_time() {
  const double rate = total_rate();
  if (!(rate > 0.0)) return kInfinity;
  return time_ + rng_.exponential() / rate;
}

BondEvent Simulation::fire(double at) {
  BondEvent ev;
  ev.time = at;
  switch (spec_.kind()) {
    case ModelKind::gKMP: {
      auto& eta = std::get<EnergyConfig>(config_).values;
      const std::size_t x = rng_.uniform_index(n_);
      const std::size_t y = x + 1 == n_ ? 0 : x + 1;
      const double a = spec_.two_s();
      ev.u = sample_beta(a, a, rng_);
      ev.site = x;
      ev.partner = y;
      ev.site_before = eta[x];
      ev.partner_before = eta[y];
      const auto [left, right] = apply_gkmp_exchange(eta[x], eta[y], ev.u);
      eta[x] = left;
      eta[y] = right;
      ev.site_after = left;
      ev.partner_after = right;
      break;
    }
    case ModelKind::dKMP: {
      auto& eta = std::get<ParticleConfig>(config_).values;
      const std::size_t x = rng_.uniform_index(n_);
      const std::size_t y = x + 1 == n_ ? 0 : x + 1;
      const std::int64_t sum = eta[x] + eta[y];
      const auto r = static_cast<std::int64_t>(rng_.uniform_index(static_cast<std::uint64_t>(sum) + 1));
      ev.site = x;
      ev.partner = y;
      ev.count = r;
      ev.site_before = static_cast<double>(eta[x]);
      ev.partner_before = static_cast<double>(eta[y]);
      eta[x] = r;
      eta[y] = sum - r;
      ev.site_after = static_cast<double>(eta[x]);
      ev.partner_after = static_cast<double>(eta[y]);
      break;
    }
    case ModelKind::Harm: {
      auto& eta = std::get<ParticleConfig>(config_).values;
      const std::size_t entry = index_.find(rng_.uniform() * index_.total());
      const std::size_t x = entry / 2;
      const int dir = entry % 2 == 0 ? +1 : -1;
      const std::size_t y = dir > 0 ? (x + 1 == n_ ? 0 : x + 1) : (x == 0 ? n_ - 1 : x - 1);
      const std::int64_t n = eta[x];
      const std::int64_t k = harm_->select(n, rng_.uniform() * harm_->total(n));
      ev.site = x;
      ev.partner = y;
      ev.direction = dir;
      ev.count = k;
      ev.site_before = static_cast<double>(eta[x]);
      ev.partner_before = static_cast<double>(eta[y]);
      eta[x] -= k;
      eta[y] += k;
      ev.site_after = static_cast<double>(eta[x]);
      ev.partner_after = static_cast<double>(eta[y]);
      refresh_site(x);
      refresh_site(y);
      break;
    }
  }
  time_ = at;
  ++events_;
  pending_.reset();
  return ev;
}

BondEvent Simulation::step(EventObserver* observer) {
  if (!pending_) pending_ = draw_next_event_time();
  const double at = *pending_;
  if (at == kInfinity) throw FrozenStateError();
  if (observer) observer->hold(*this, at - time_);
  const BondEvent ev = fire(at);
  if (observer) observer->on_event(*this, ev);
  return ev;
}

void Simulation::advance_to(double target, EventObserver* observer) {
  if (!(target >= time_)) {
    throw std::invalid_argument(
        fmt::format("cannot advance to micro time {} before current time {}", target, time_));
  }
  for (;;) {
    if (!pending_) pending_ = draw_next_event_time();
    const double at = *pending_;
    if (at > target) break;
    if (observer) observer->hold(*this, at - time_);
    const BondEvent ev = fire(at);
    if (observer) observer->on_event(*this, ev);
  }
  if (observer) observer->hold(*this, target - time_);
  time_ = target;
}

double Simulation::rate_index_discrepancy() {
  if (spec_.kind() != ModelKind::Harm) return 0.0;
  const auto& eta = std::get<ParticleConfig>(config_).values;
  double worst = 0.0;
  double recomputed_total = 0.0;
  for (std::size_t x = 0; x < n_; ++x) {
    const double w = harm_total_rate(eta[x], spec_.spin());
    recomputed_total += 2.0 * w;
    worst = std::max(worst, std::abs(index_.weight(2 * x) - w));
    worst = std::max(worst, std::abs(index_.weight(2 * x + 1) - w));
  }
  return std::max(worst, std::abs(index_.total() - recomputed_total));
}

// ---------------------------------------------------------------------------

void validate(const ObservationPlan& plan) {
  double prev = 0.0;
  for (double t : plan.macro_times) {
    if (!std::isfinite(t) || t < 0.0) {
      throw std::invalid_argument(fmt::format("macro_times: {} is not a finite time >= 0", t));
    }
    if (t < prev) throw std::invalid_argument("macro_times must be non-decreasing");
    prev = t;
  }
}

namespace {

double pairing(const Configuration& config, const std::vector<double>& g) {
  const std::size_t n = g.size();
  double acc = 0.0;
  for (std::size_t x = 0; x < n; ++x) acc += value_at(config, x) * g[x];
  return acc / static_cast<double>(n);
}

}  // namespace

std::vector<Observation> run_diffusive(Simulation& sim, const ObservationPlan& plan) {
  validate(plan);
  const std::size_t n = sim.size();
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  if (!plan.macro_times.empty() && plan.macro_times.front() * n2 < sim.micro_time()) {
    throw std::invalid_argument("macro_times: first time lies before the current state");
  }

  std::vector<std::vector<double>> grids;
  grids.reserve(plan.pairings.size());
  for (const auto& g : plan.pairings) grids.push_back(g.grid(n));

  std::optional<MartingaleTracker> tracker;
  if (plan.martingale) tracker.emplace(sim, *plan.martingale);
  EventObserver* observer = tracker ? &*tracker : nullptr;

  std::vector<Observation> out;
  out.reserve(plan.macro_times.size());
  for (double t : plan.macro_times) {
    sim.advance_to(t * n2, observer);
    Observation obs;
    obs.t = t;
    const auto& config = sim.configuration();
    if (plan.record_mass) obs.mass = total_mass(config);
    obs.pairings.reserve(grids.size());
    for (const auto& g : grids) obs.pairings.push_back(pairing(config, g));
    if (plan.record_profile) obs.profile = as_doubles(config);
    if (tracker) {
      obs.martingale = tracker->martingale();
      obs.quadratic_variation = tracker->quadratic_variation();
    }
    out.push_back(std::move(obs));
  }
  return out;
}

// ---------------------------------------------------------------------------

MartingaleTracker::MartingaleTracker(const Simulation& sim, const TestFunction& g)
    : spec_(sim.spec()),
      n_(sim.size()),
      diffusion_(diffusion_coefficient(sim.spec())),
      g_(g.grid(n_)),
      lap_g_(g.discrete_laplacian_grid(n_)),
      eta_(as_doubles(sim.configuration())) {
  const auto grad = g.forward_gradient_grid(n_);
  grad_sq_.resize(n_);
  for (std::size_t x = 0; x < n_; ++x) grad_sq_[x] = grad[x] * grad[x];
  for (std::size_t x = 0; x < n_; ++x) {
    pairing_ += g_[x] * eta_[x];
    drift_ += lap_g_[x] * eta_[x];
    upsilon_sum_ += bond_term(x);
  }
  pairing_ /= static_cast<double>(n_);
  drift_ /= static_cast<double>(n_);
  pairing0_ = pairing_;
}

double MartingaleTracker::bond_term(std::size_t x) const {
  const std::size_t y = x + 1 == n_ ? 0 : x + 1;
  return grad_sq_[x] * bond_fluctuation(spec_, eta_[x], eta_[y]);
}

void MartingaleTracker::hold(const Simulation&, double dt) {
  drift_integral_ += drift_ * dt;
  upsilon_integral_ += upsilon_sum_ * dt;
}

void MartingaleTracker::on_event(const Simulation&, const BondEvent& ev) {
  const auto wrap_left = [this](std::size_t x) { return x == 0 ? n_ - 1 : x - 1; };
  std::size_t bonds[4] = {wrap_left(ev.site), ev.site, wrap_left(ev.partner), ev.partner};
  std::sort(bonds, bonds + 4);
  const std::size_t count = static_cast<std::size_t>(std::unique(bonds, bonds + 4) - bonds);

  for (std::size_t i = 0; i < count; ++i) upsilon_sum_ -= bond_term(bonds[i]);
  const double d_site = ev.site_after - eta_[ev.site];
  const double d_partner = ev.partner_after - eta_[ev.partner];
  eta_[ev.site] = ev.site_after;
  eta_[ev.partner] = ev.partner_after;
  for (std::size_t i = 0; i < count; ++i) upsilon_sum_ += bond_term(bonds[i]);

  const double inv_n = 1.0 / static_cast<double>(n_);
  pairing_ += (g_[ev.site] * d_site + g_[ev.partner] * d_partner) * inv_n;
  drift_ += (lap_g_[ev.site] * d_site + lap_g_[ev.partner] * d_partner) * inv_n;
}

double MartingaleTracker::martingale() const {
  const double n2 = static_cast<double>(n_) * static_cast<double>(n_);
  return pairing_ - pairing0_ - diffusion_ * drift_integral_ / n2;
}

double MartingaleTracker::quadratic_variation() const {
  const double n2 = static_cast<double>(n_) * static_cast<double>(n_);
  return upsilon_integral_ / (n2 * n2);
}

// ---------------------------------------------------------------------------

ReplicaResult run_replica(const ReplicaJob& job, std::size_t replica) {
  ReplicaResult result;
  result.replica = replica;
  try {
    RngStream rng(job.seed, replica);
    Configuration initial = job.initial(rng);
    Simulation sim(job.spec, std::move(initial), std::move(rng));
    result.observations = run_diffusive(sim, job.plan);
    result.events = sim.event_count();
    if (job.plan.keep_final_state) result.final_state = sim.configuration();
  } catch (const std::exception& e) {
    result.observations.clear();
    result.error = e.what();
  }
  return result;
}

std::vector<ReplicaResult> run_replicas(const ReplicaJob& job, std::size_t replicas,
                                        Execution mode) {
  if (replicas == 0) throw std::invalid_argument("replicas must be at least 1");
  std::vector<ReplicaResult> results(replicas);
  if (mode == Execution::serial) {
    for (std::size_t r = 0; r < replicas; ++r) results[r] = run_replica(job, r);
    return results;
  }
  const auto count = static_cast<std::int64_t>(replicas);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t r = 0; r < count; ++r) {
    results[static_cast<std::size_t>(r)] = run_replica(job, static_cast<std::size_t>(r));
  }
  return results;
}

std::vector<ReplicaResult> run_replicas_in_order(const ReplicaJob& job,
                                                 std::span<const std::size_t> order) {
  std::size_t replicas = 0;
  for (std::size_t r : order) replicas = std::max(replicas, r + 1);
  std::vector<ReplicaResult> results(replicas);
  for (std::size_t r : order) results[r] = run_replica(job, r);
  return results;
}

}  // namespace gradspin
