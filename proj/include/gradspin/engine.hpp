#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gradspin/lattice.hpp"
#include "gradspin/models.hpp"
#include "gradspin/rate_index.hpp"
#include "gradspin/rng.hpp"
#include "gradspin/test_function.hpp"

namespace gradspin {

/// Raised by Simulation::step when no event can happen (total rate zero).
class FrozenStateError : public std::runtime_error {
public:
  FrozenStateError() : std::runtime_error("frozen state: total jump rate is zero") {}
};

/// One applied event.
///
/// Bond-clock models (gKMP, dKMP): `site` is the left end of the bond
/// (site, site+1), `partner` the right end, direction +1; `u` is the Beta
/// draw (gKMP) and `count` the new left occupation (dKMP).
/// Harm: `site` is the departure site, `partner` the arrival site,
/// `direction` +1 or -1, `count` the number of particles moved.
struct BondEvent {
  std::size_t site = 0;
  std::size_t partner = 0;
  int direction = 1;
  double u = 0.0;
  std::int64_t count = 0;
  double site_before = 0.0;
  double partner_before = 0.0;
  double site_after = 0.0;
  double partner_after = 0.0;
  double time = 0.0;  // micro time
};

class Simulation;

/// Hooks called while a trajectory is advanced. `hold` reports an interval of
/// micro time during which the configuration is constant; `on_event` follows
/// every applied event.
class EventObserver {
public:
  virtual ~EventObserver() = default;
  virtual void hold(const Simulation& sim, double dt) { (void)sim, (void)dt; }
  virtual void on_event(const Simulation& sim, const BondEvent& event) { (void)sim, (void)event; }
};

/// Exact continuous-time simulation of one model on the torus.
///
/// The next event time is drawn once and kept pending, so the trajectory is
/// a function of the seed only and does not depend on how often the caller
/// stops to look at it.
class Simulation {
public:
  /// Throws std::invalid_argument if the configuration does not suit the
  /// model (energy vs particle) or is invalid.
  Simulation(ModelSpec spec, Configuration initial, RngStream rng);

  const ModelSpec& spec() const noexcept { return spec_; }
  const Configuration& configuration() const noexcept { return config_; }
  std::size_t size() const noexcept { return n_; }
  double micro_time() const noexcept { return time_; }
  std::uint64_t event_count() const noexcept { return events_; }
  RngStream& rng() noexcept { return rng_; }

  double total_rate() const;

  /// Fires the next event: advances micro time past the holding interval and
  /// applies the exchange. Throws FrozenStateError when the total rate is 0.
  BondEvent step(EventObserver* observer = nullptr);

  /// Applies every event with time <= target and leaves micro_time() ==
  /// target. A frozen state simply jumps to the target.
  void advance_to(double target, EventObserver* observer = nullptr);

  /// Harm only: max |indexed rate - recomputed rate| over all 2N entries
  /// (0 for the bond-clock models).
  double rate_index_discrepancy();

private:
  double directional_rate(std::int64_t n);
  void refresh_site(std::size_t x);
  double draw_next_event_time();
  BondEvent fire(double at);

  ModelSpec spec_;
  Configuration config_;
  RngStream rng_;
  std::size_t n_ = 0;
  double time_ = 0.0;
  std::optional<double> pending_;
  std::uint64_t events_ = 0;
  std::optional<HarmRateTable> harm_;
  RateIndex index_;  // entry 2x: x -> x+1, entry 2x+1: x -> x-1
};

// ---------------------------------------------------------------------------
// Observation in diffusive time.
// ---------------------------------------------------------------------------

/// What to record at each macroscopic time t (micro time N^2 t).
struct ObservationPlan {
  std::vector<double> macro_times;  // non-decreasing, finite, >= 0
  std::vector<TestFunction> pairings;
  bool record_mass = true;
  bool record_profile = false;
  /// Track the Dynkin martingale of this test function from time 0.
  std::optional<TestFunction> martingale;
  /// Keep the configuration at the last time (replica runs only).
  bool keep_final_state = false;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const ObservationPlan& plan);

struct Observation {
  double t = 0.0;
  double mass = 0.0;
  std::vector<double> pairings;  // same order as plan.pairings
  std::vector<double> profile;   // empty unless plan.record_profile
  double martingale = 0.0;       // M_t
  double quadratic_variation = 0.0;  // int_0^t Upsilon ds
};

/// Records the plan along one trajectory; state is read from the cadlag path
/// at micro time N^2 t. The simulation is advanced to the last time.
std::vector<Observation> run_diffusive(Simulation& sim, const ObservationPlan& plan);

/// Dynkin martingale of a test function G along a trajectory:
///   M_t = <pi_t, G> - <pi_0, G> - int_0^t D <pi_s, Delta_N G> ds
/// and the integral of its carre du champ, both integrated exactly over the
/// piecewise-constant path.
class MartingaleTracker : public EventObserver {
public:
  MartingaleTracker(const Simulation& sim, const TestFunction& g);

  void hold(const Simulation& sim, double dt) override;
  void on_event(const Simulation& sim, const BondEvent& event) override;

  double martingale() const;
  double quadratic_variation() const;
  double pairing() const noexcept { return pairing_; }

private:
  double bond_term(std::size_t x) const;

  ModelSpec spec_;
  std::size_t n_;
  double diffusion_;
  std::vector<double> g_;
  std::vector<double> lap_g_;
  std::vector<double> grad_sq_;
  std::vector<double> eta_;
  double pairing0_ = 0.0;
  double pairing_ = 0.0;
  double drift_ = 0.0;       // (1/N) sum Delta_N G(x/N) eta_x
  double upsilon_sum_ = 0.0;  // sum_x (grad G)^2 [D (eta_x - eta_x+1)^2 - L(eta_x eta_x+1)]
  double drift_integral_ = 0.0;
  double upsilon_integral_ = 0.0;
};

// ---------------------------------------------------------------------------
// Replicas.
// ---------------------------------------------------------------------------

enum class Execution { serial, parallel };

/// Draws the initial configuration of one replica from its own stream.
using InitialSampler = std::function<Configuration(RngStream&)>;

struct ReplicaJob {
  ModelSpec spec{ModelKind::dKMP, 0.5};
  InitialSampler initial;
  ObservationPlan plan;
  std::uint64_t seed = 0;
};

struct ReplicaResult {
  std::size_t replica = 0;
  std::vector<Observation> observations;
  std::uint64_t events = 0;
  std::optional<Configuration> final_state;
  std::string error;  // empty on success

  bool ok() const noexcept { return error.empty(); }
};

/// Replica r uses RngStream(seed, r) for its initial state and dynamics.
/// Errors are captured in the result rather than thrown.
ReplicaResult run_replica(const ReplicaJob& job, std::size_t replica);

/// R replicas, serially or over OpenMP threads. Results are indexed by
/// replica and do not depend on the execution mode.
std::vector<ReplicaResult> run_replicas(const ReplicaJob& job, std::size_t replicas,
                                        Execution mode = Execution::parallel);

/// Serial reference that executes replicas in the given order; the result
/// vector is still indexed by replica number.
std::vector<ReplicaResult> run_replicas_in_order(const ReplicaJob& job,
                                                 std::span<const std::size_t> order);

}  // namespace gradspin
