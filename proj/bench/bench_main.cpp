// Serial reference vs OpenMP for the two parallel kernels, plus raw event
// throughput of the single-replica engine. Thread count follows
// OMP_NUM_THREADS.
#include <benchmark/benchmark.h>

#include "gradspin/analysis.hpp"
#include "gradspin/engine.hpp"
#include "gradspin/measures.hpp"

using namespace gradspin;

namespace {

ModelSpec model_for(std::int64_t id) {
  switch (id) {
    case 0: return {ModelKind::gKMP, 1.0};
    case 1: return {ModelKind::dKMP, 0.5};
    default: return {ModelKind::Harm, 0.5};
  }
}

ReplicaJob replica_job(const ModelSpec& spec, std::size_t n) {
  ReplicaJob job;
  job.spec = spec;
  job.initial = [spec, n](RngStream& rng) { return sample_invariant({spec, local_parameter(spec, 2.0)}, n, rng); };
  job.plan.macro_times = {0.01};
  job.plan.pairings = {TestFunction::cosine(1)};
  job.seed = 5;
  return job;
}

void BM_Replicas(benchmark::State& state, Execution mode) {
  const auto job = replica_job(model_for(state.range(0)), 64);
  std::uint64_t events = 0;
  for (auto _ : state) {
    const auto results = run_replicas(job, 32, mode);
    for (const auto& r : results) events += r.events;
    benchmark::DoNotOptimize(results.data());
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}

void BM_Scan(benchmark::State& state, Execution mode) {
  const ModelSpec spec = model_for(state.range(0));
  for (auto _ : state) {
    const auto report = scan_criterion(spec, 16, 32, 0, mode);
    benchmark::DoNotOptimize(report.checks);
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_Replicas, serial, Execution::serial)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Replicas, openmp, Execution::parallel)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
// Only the particle models have tail-sum rates to scan.
BENCHMARK_CAPTURE(BM_Scan, serial, Execution::serial)->DenseRange(1, 2)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Scan, openmp, Execution::parallel)->DenseRange(1, 2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
