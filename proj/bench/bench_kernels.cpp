// Serial reference vs. OpenMP kernels on the full-size scenarios.
//
//   SELFTRIG_THREADS=4 ./selftrig_bench --benchmark_filter=Scan

#include "selftrig/experiment.hpp"
#include "selftrig/kernels.hpp"
#include "selftrig/scenario.hpp"
#include "selftrig/trigger.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>
#include <map>
#include <memory>

using namespace selftrig;

namespace {

Experiment& experiment(const std::string& name) {
  static std::map<std::string, std::unique_ptr<Experiment>> cache;
  auto& slot = cache[name];
  if (!slot) {
    slot = std::make_unique<Experiment>(
        load_scenario(std::filesystem::path(SELFTRIG_SCENARIO_DIR) / (name + ".yaml")));
  }
  return *slot;
}

struct ScanSetup {
  ScanTable table;
  HorizonTest test;
  Vector x;
};

ScanSetup scan_setup(const std::string& name) {
  Experiment& ex = experiment(name);
  ScanSetup s{make_scan_table(ex.space(), ex.cache()), {}, ex.scenario().x0};
  s.test = ex.perturbed() ? perturbed_test(*ex.perturbed_certificate(), ex.space().l_max())
                          : unperturbed_test(*ex.certificate(), ex.space().l_max());
  return s;
}

void BM_ScanSerial(benchmark::State& state, const std::string& name) {
  const auto s = scan_setup(name);
  for (auto _ : state) benchmark::DoNotOptimize(scan_serial(s.table, s.test, s.x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.table.space->count()));
}

void BM_ScanParallel(benchmark::State& state, const std::string& name) {
  const auto s = scan_setup(name);
  const int threads = worker_count();
  for (auto _ : state) benchmark::DoNotOptimize(scan_parallel(s.table, s.test, s.x, threads));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.table.space->count()));
  state.counters["workers"] = threads;
}

void BM_Regions(benchmark::State& state, const std::string& name, bool reference) {
  Experiment& ex = experiment(name);
  for (auto _ : state) {
    if (ex.perturbed()) {
      benchmark::DoNotOptimize(precompute_offline_perturbed(
          *ex.perturbed_certificate(), ex.space(), ex.cache(), ex.partition(), reference));
    } else {
      benchmark::DoNotOptimize(precompute_offline_unperturbed(
          *ex.certificate(), ex.space(), ex.cache(), ex.partition(), reference));
    }
  }
  state.counters["regions"] = ex.partition().count();
}

}  // namespace

BENCHMARK_CAPTURE(BM_ScanSerial, unperturbed, std::string("online_unperturbed_b0"))
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ScanParallel, unperturbed, std::string("online_unperturbed_b0"))
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ScanSerial, perturbed, std::string("online_perturbed_b0"))
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ScanParallel, perturbed, std::string("online_perturbed_b0"))
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Regions, unperturbed_reference, std::string("offline_unperturbed_b0"), true)
    ->Unit(benchmark::kMillisecond)
    ->Iterations(1);
BENCHMARK_CAPTURE(BM_Regions, unperturbed_pruned, std::string("offline_unperturbed_b0"), false)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Regions, perturbed_pruned, std::string("offline_perturbed_b0"), false)
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
