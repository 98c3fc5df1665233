// Parallel kernels against their serial references on phantom data.
#include <benchmark/benchmark.h>

#include <map>

#include "longfuse/fusion.hpp"
#include "longfuse/patch.hpp"
#include "longfuse/phantom.hpp"

using namespace longfuse;

namespace {

const Phantom &phantom(int dim) {
  static std::map<int, Phantom> cache;
  auto it = cache.find(dim);
  if (it == cache.end())
    it = cache.emplace(dim, generate_phantom(PhantomSpec::concentric({dim, dim, dim}, 3, 4, 1))).first;
  return it->second;
}

void BM_CorrespondenceReference(benchmark::State &state) {
  const Phantom &ph = phantom(static_cast<int>(state.range(0)));
  const PatchSpec spec{2, 3};
  for (auto _ : state)
    benchmark::DoNotOptimize(reference::compute_correspondence_map(ph.series.target(0), ph.bank.image(0), spec, {}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ph.series.target(0).size()));
}

void BM_CorrespondenceParallel(benchmark::State &state) {
  const Phantom &ph = phantom(static_cast<int>(state.range(0)));
  const PatchSpec spec{2, 3};
  const int workers = static_cast<int>(state.range(1));
  for (auto _ : state)
    benchmark::DoNotOptimize(compute_correspondence_map(ph.series.target(0), ph.bank.image(0), spec, {}, workers));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ph.series.target(0).size()));
}

FusionConfig bench_config(FusionMode mode, int workers) {
  FusionConfig cfg;
  cfg.mode = mode;
  cfg.workers = workers;
  return cfg;
}

void BM_FuseReference(benchmark::State &state) {
  const Phantom &ph = phantom(static_cast<int>(state.range(0)));
  const auto cfg = bench_config(static_cast<FusionMode>(state.range(1)), 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(reference::fuse(ph.series, ph.bank, cfg));
  state.SetLabel(to_string(cfg.mode));
}

void BM_FuseParallel(benchmark::State &state) {
  const Phantom &ph = phantom(static_cast<int>(state.range(0)));
  const auto cfg = bench_config(static_cast<FusionMode>(state.range(1)), static_cast<int>(state.range(2)));
  for (auto _ : state)
    benchmark::DoNotOptimize(fuse(ph.series, ph.bank, cfg));
  state.SetLabel(to_string(cfg.mode));
}

constexpr auto kJlf = static_cast<std::int64_t>(FusionMode::jlf);
constexpr auto kFourD = static_cast<std::int64_t>(FusionMode::fourd_jlf);

} // namespace

BENCHMARK(BM_CorrespondenceReference)->Arg(24)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CorrespondenceParallel)->ArgsProduct({{24, 32}, {1, 2, 4}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FuseReference)->ArgsProduct({{16}, {kJlf, kFourD}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FuseParallel)->ArgsProduct({{16, 24}, {kJlf, kFourD}, {1, 2, 4}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
