#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gradspin/engine.hpp"
#include "gradspin/measures.hpp"
#include "stats.hpp"

using namespace gradspin;
using testing_util::summarize;
using testing_util::z_score;

namespace {

Configuration invariant_config(const ModelSpec& spec, double rho, std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 1000);
  return sample_invariant({spec, rho}, n, rng);
}

InitialSampler invariant_sampler(const ModelSpec& spec, double rho, std::size_t n) {
  return [=](RngStream& rng) { return sample_invariant({spec, rho}, n, rng); };
}

bool same_observations(const std::vector<Observation>& a, const std::vector<Observation>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].t != b[i].t || a[i].mass != b[i].mass || a[i].pairings != b[i].pairings ||
        a[i].profile != b[i].profile || a[i].martingale != b[i].martingale ||
        a[i].quadratic_variation != b[i].quadratic_variation) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST(Simulation, RejectsMismatchedConfiguration) {
  EXPECT_THROW(Simulation({ModelKind::gKMP, 1.0}, ParticleConfig{{1, 2}}, RngStream(1, 0)),
               std::invalid_argument);
  EXPECT_THROW(Simulation({ModelKind::Harm, 1.0}, EnergyConfig{{1.0, 2.0}}, RngStream(1, 0)),
               std::invalid_argument);
  EXPECT_THROW(Simulation({ModelKind::dKMP, 0.5}, ParticleConfig{{1}}, RngStream(1, 0)),
               std::invalid_argument);
}

TEST(Simulation, DkmpTwoSiteSplitIsFair) {
  int moved = 0;
  constexpr int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    Simulation sim({ModelKind::dKMP, 0.5}, ParticleConfig{{1, 0}}, RngStream(77, i));
    sim.step();
    const auto& eta = std::get<ParticleConfig>(sim.configuration()).values;
    ASSERT_EQ(eta[0] + eta[1], 1);
    moved += eta[0] == 0;
  }
  const double p = static_cast<double>(moved) / trials;
  EXPECT_LT(std::abs(p - 0.5) / std::sqrt(0.25 / trials), 4.0);
}

TEST(Simulation, EmptyHarmStateIsFrozen) {
  Simulation sim({ModelKind::Harm, 1.0}, ParticleConfig{{0, 0, 0, 0}}, RngStream(1, 0));
  EXPECT_EQ(sim.total_rate(), 0.0);
  EXPECT_THROW(sim.step(), FrozenStateError);
  sim.advance_to(12.5);
  EXPECT_EQ(sim.micro_time(), 12.5);
  EXPECT_EQ(sim.event_count(), 0u);
}

TEST(Simulation, GkmpHoldingTimesHaveMeanOneOverN) {
  constexpr std::size_t n = 16;
  Simulation sim({ModelKind::gKMP, 1.0}, invariant_config({ModelKind::gKMP, 1.0}, 1.0, n, 3),
                 RngStream(3, 0));
  std::vector<double> gaps;
  double last = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const auto ev = sim.step();
    gaps.push_back(ev.time - last);
    last = ev.time;
  }
  EXPECT_LT(z_score(summarize(gaps), 1.0 / n), 4.0);
}

TEST(Simulation, BondClockEventCountIsPoisson) {
  // N = 32, t = 0.01: micro horizon 10.24, mean count N * 10.24 = 327.68.
  constexpr std::size_t n = 32;
  constexpr int runs = 2000;
  const double mean = n * 10.24;
  std::vector<double> counts;
  for (int r = 0; r < runs; ++r) {
    Simulation sim({ModelKind::dKMP, 0.5}, invariant_config({ModelKind::dKMP, 0.5}, 1.0, n, r),
                   RngStream(4, r));
    sim.advance_to(10.24);
    counts.push_back(static_cast<double>(sim.event_count()));
  }
  EXPECT_LT(z_score(summarize(counts), mean), 4.0);

  // Chi-square over equiprobable-ish bins built from the Poisson CDF.
  std::vector<double> edges;
  {
    double cdf = 0.0;
    double log_p = -mean;
    double next = 0.1;
    for (int k = 0; k < 1000 && next < 1.0; ++k) {
      cdf += std::exp(log_p);
      if (cdf >= next) {
        edges.push_back(k);
        next += 0.1;
      }
      log_p += std::log(mean) - std::log(k + 1.0);
    }
  }
  std::vector<int> observed(edges.size() + 1, 0);
  for (double c : counts) {
    observed[std::lower_bound(edges.begin(), edges.end(), c) - edges.begin()]++;
  }
  std::vector<double> expected(observed.size(), 0.0);
  {
    double log_p = -mean;
    for (int k = 0; k < 1000; ++k) {
      expected[std::lower_bound(edges.begin(), edges.end(), k) - edges.begin()] += std::exp(log_p) * runs;
      log_p += std::log(mean) - std::log(k + 1.0);
    }
  }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    chi2 += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  }
  // 99th percentile of chi-square, df = bins - 1 (at most 10).
  const double critical[] = {0, 6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090, 21.666, 23.209};
  ASSERT_LE(observed.size() - 1, 10u);
  EXPECT_LT(chi2, critical[observed.size() - 1]);
}

TEST(Simulation, MassIsConserved) {
  for (const ModelSpec spec : {ModelSpec{ModelKind::dKMP, 0.5}, ModelSpec{ModelKind::Harm, 0.5},
                               ModelSpec{ModelKind::Harm, 2.0}}) {
    Simulation sim(spec, invariant_config(spec, 1.3, 40, 5), RngStream(5, 0));
    const double before = total_mass(sim.configuration());
    for (int i = 0; i < 100000; ++i) sim.step();
    EXPECT_EQ(total_mass(sim.configuration()), before);
  }
  const ModelSpec gkmp(ModelKind::gKMP, 0.5);
  Simulation sim(gkmp, invariant_config(gkmp, 2.0, 40, 6), RngStream(6, 0));
  const double before = total_mass(sim.configuration());
  for (int i = 0; i < 100000; ++i) sim.step();
  EXPECT_NEAR(total_mass(sim.configuration()), before, 1e-9 * before);
}

TEST(Simulation, HarmRateIndexStaysConsistent) {
  const ModelSpec spec(ModelKind::Harm, 0.75);
  Simulation sim(spec, invariant_config(spec, 2.0, 64, 7), RngStream(7, 0));
  for (int i = 0; i < 1000000; ++i) sim.step();
  EXPECT_LE(sim.rate_index_discrepancy(), 1e-9);
}

TEST(Simulation, AdvanceIsIndependentOfStopping) {
  const ModelSpec spec(ModelKind::Harm, 1.0);
  const auto init = invariant_config(spec, 1.0, 20, 8);
  Simulation a(spec, init, RngStream(8, 0));
  Simulation b(spec, init, RngStream(8, 0));
  a.advance_to(50.0);
  for (int i = 1; i <= 100; ++i) b.advance_to(0.5 * i);
  EXPECT_EQ(a.event_count(), b.event_count());
  EXPECT_EQ(std::get<ParticleConfig>(a.configuration()).values,
            std::get<ParticleConfig>(b.configuration()).values);
  EXPECT_THROW(a.advance_to(10.0), std::invalid_argument);
}

TEST(RunDiffusive, EmptyPlanLeavesStateUnchanged) {
  const ModelSpec spec(ModelKind::dKMP, 0.5);
  const auto init = invariant_config(spec, 1.0, 16, 9);
  Simulation sim(spec, init, RngStream(9, 0));
  EXPECT_TRUE(run_diffusive(sim, ObservationPlan{}).empty());
  EXPECT_EQ(sim.event_count(), 0u);
  EXPECT_EQ(std::get<ParticleConfig>(sim.configuration()).values, std::get<ParticleConfig>(init).values);
}

TEST(RunDiffusive, MassRecordedConstantAndPlanValidated) {
  const ModelSpec spec(ModelKind::Harm, 0.5);
  Simulation sim(spec, invariant_config(spec, 1.0, 16, 10), RngStream(10, 0));
  ObservationPlan plan;
  plan.macro_times = {0.0, 0.01, 0.02, 0.02, 0.05};
  plan.pairings = {TestFunction::one()};
  const auto obs = run_diffusive(sim, plan);
  ASSERT_EQ(obs.size(), 5u);
  for (const auto& o : obs) {
    EXPECT_EQ(o.mass, obs[0].mass);
    EXPECT_DOUBLE_EQ(o.pairings[0], obs[0].mass / 16.0);
  }
  EXPECT_DOUBLE_EQ(sim.micro_time(), 0.05 * 256);

  ObservationPlan bad;
  bad.macro_times = {0.1, 0.05};
  EXPECT_THROW(validate(bad), std::invalid_argument);
  bad.macro_times = {-1.0};
  EXPECT_THROW(validate(bad), std::invalid_argument);
}

TEST(Martingale, ConstantTestFunctionGivesZero) {
  const ModelSpec spec(ModelKind::gKMP, 1.0);
  Simulation sim(spec, invariant_config(spec, 1.0, 16, 11), RngStream(11, 0));
  ObservationPlan plan;
  plan.macro_times = {0.02, 0.05};
  plan.martingale = TestFunction::one();
  for (const auto& o : run_diffusive(sim, plan)) {
    EXPECT_NEAR(o.martingale, 0.0, 1e-12);
    EXPECT_EQ(o.quadratic_variation, 0.0);
  }
}

TEST(Martingale, IncrementalTrackerMatchesRecomputation) {
  // Drift and Upsilon are updated incrementally; check them against a
  // from-scratch integration on the same trajectory.
  struct Recompute : EventObserver {
    TestFunction g = TestFunction::cosine(1);
    double drift_integral = 0.0;
    double upsilon_integral = 0.0;
    void hold(const Simulation& sim, double dt) override {
      const std::size_t n = sim.size();
      const auto lap = g.discrete_laplacian_grid(n);
      const auto grad = g.forward_gradient_grid(n);
      double drift = 0.0;
      double ups = 0.0;
      for (std::size_t x = 0; x < n; ++x) {
        const double a = value_at(sim.configuration(), x);
        const double b = value_at(sim.configuration(), (x + 1) % n);
        drift += lap[x] * a / n;
        ups += grad[x] * grad[x] * bond_fluctuation(sim.spec(), a, b);
      }
      drift_integral += drift * dt;
      upsilon_integral += ups * dt;
    }
  };
  for (const ModelSpec spec : {ModelSpec{ModelKind::dKMP, 0.5}, ModelSpec{ModelKind::Harm, 1.0},
                               ModelSpec{ModelKind::gKMP, 0.5}}) {
    const std::size_t n = 12;
    const auto init = invariant_config(spec, 1.5, n, 12);
    Simulation sim(spec, init, RngStream(12, 0));
    MartingaleTracker tracker(sim, TestFunction::cosine(1));
    Recompute check;
    struct Both : EventObserver {
      EventObserver* a;
      EventObserver* b;
      void hold(const Simulation& s, double dt) override { a->hold(s, dt), b->hold(s, dt); }
      void on_event(const Simulation& s, const BondEvent& e) override { a->on_event(s, e), b->on_event(s, e); }
    } both;
    both.a = &tracker;
    both.b = &check;
    sim.advance_to(200.0, &both);
    const double n2 = static_cast<double>(n * n);
    const double pair_now = [&] {
      double acc = 0.0;
      for (std::size_t x = 0; x < n; ++x) acc += value_at(sim.configuration(), x) * check.g(double(x) / n);
      return acc / n;
    }();
    const double pair0 = [&] {
      double acc = 0.0;
      for (std::size_t x = 0; x < n; ++x) acc += value_at(init, x) * check.g(double(x) / n);
      return acc / n;
    }();
    const double expected_m = pair_now - pair0 - diffusion_coefficient(spec) * check.drift_integral / n2;
    EXPECT_NEAR(tracker.martingale(), expected_m, 1e-9);
    EXPECT_NEAR(tracker.quadratic_variation(), check.upsilon_integral / (n2 * n2),
                1e-9 * std::max(1.0, check.upsilon_integral / (n2 * n2)));
  }
}

TEST(Replicas, ExecutionModesAndOrderAreBitIdentical) {
  for (const ModelSpec spec : {ModelSpec{ModelKind::gKMP, 1.0}, ModelSpec{ModelKind::Harm, 0.5}}) {
    ReplicaJob job;
    job.spec = spec;
    job.initial = invariant_sampler(spec, 1.0, 16);
    job.plan.macro_times = {0.01, 0.03};
    job.plan.pairings = {TestFunction::sine(1), TestFunction::cosine(2)};
    job.plan.martingale = TestFunction::cosine(1);
    job.plan.keep_final_state = true;
    job.seed = 2024;
    const auto serial = run_replicas(job, 12, Execution::serial);
    const auto parallel = run_replicas(job, 12, Execution::parallel);
    std::vector<std::size_t> order(12);
    std::iota(order.begin(), order.end(), 0);
    std::reverse(order.begin(), order.end());
    std::swap(order[2], order[7]);
    const auto permuted = run_replicas_in_order(job, order);
    for (std::size_t r = 0; r < 12; ++r) {
      ASSERT_TRUE(serial[r].ok()) << serial[r].error;
      EXPECT_EQ(serial[r].replica, r);
      EXPECT_TRUE(same_observations(serial[r].observations, parallel[r].observations));
      EXPECT_TRUE(same_observations(serial[r].observations, permuted[r].observations));
      EXPECT_EQ(serial[r].events, permuted[r].events);
      EXPECT_EQ(as_doubles(*serial[r].final_state), as_doubles(*parallel[r].final_state));
    }
  }
}

TEST(Replicas, SingleReplicaEqualsDirectRun) {
  const ModelSpec spec(ModelKind::dKMP, 0.5);
  ReplicaJob job;
  job.spec = spec;
  job.initial = invariant_sampler(spec, 2.0, 16);
  job.plan.macro_times = {0.02};
  job.plan.pairings = {TestFunction::cosine(1)};
  job.seed = 99;
  const auto results = run_replicas(job, 1);

  RngStream rng(99, 0);
  auto init = job.initial(rng);
  Simulation sim(spec, std::move(init), std::move(rng));
  EXPECT_TRUE(same_observations(results[0].observations, run_diffusive(sim, job.plan)));
  EXPECT_EQ(results[0].events, sim.event_count());
}

TEST(Replicas, ErrorsAreCapturedPerReplica) {
  ReplicaJob job;
  job.spec = ModelSpec(ModelKind::dKMP, 0.5);
  job.initial = [](RngStream& rng) -> Configuration {
    if (rng.stream_id() == 1) throw std::runtime_error("boom");
    return ParticleConfig{{1, 2, 3}};
  };
  job.plan.macro_times = {0.01};
  const auto results = run_replicas(job, 3);
  EXPECT_TRUE(results[0].ok());
  EXPECT_FALSE(results[1].ok());
  EXPECT_EQ(results[1].error, "boom");
  EXPECT_TRUE(results[2].ok());
  EXPECT_THROW(run_replicas(job, 0), std::invalid_argument);
}

TEST(Replicas, StandardErrorScalesWithReplicaCount) {
  const ModelSpec spec(ModelKind::dKMP, 0.5);
  ReplicaJob job;
  job.spec = spec;
  job.initial = invariant_sampler(spec, 1.0, 16);
  job.plan.macro_times = {0.01};
  job.plan.pairings = {TestFunction::cosine(1)};
  job.seed = 5;
  const auto se_for = [&](std::size_t r) {
    std::vector<double> xs;
    for (const auto& res : run_replicas(job, r)) xs.push_back(res.observations[0].pairings[0]);
    return summarize(xs).se;
  };
  const double ratio = se_for(400) / se_for(1600);
  EXPECT_NEAR(ratio, 2.0, 0.3);
}
