#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "scalekit/families.hpp"
#include "scalekit/runtime_model.hpp"
#include "scalekit/scaling.hpp"

namespace {

using namespace scalekit;

void BM_NetworkComplexity(benchmark::State& state, const char* name) {
  const auto spec = registry_lookup(name).spec;
  for (auto _ : state) benchmark::DoNotOptimize(network_complexity(spec));
}
BENCHMARK_CAPTURE(BM_NetworkComplexity, efficientnet_b0, "EfficientNet-B0");
BENCHMARK_CAPTURE(BM_NetworkComplexity, regnety_4gf, "RegNetY-4GF");

void BM_ScaleAndQuantize(benchmark::State& state) {
  const auto spec = registry_lookup("RegNetY-500MF").spec;
  const auto policy = fast_policy(kFastAlpha);
  for (auto _ : state) {
    benchmark::DoNotOptimize(quantize_network(scale_network(spec, policy, 16.0)));
  }
}
BENCHMARK(BM_ScaleAndQuantize);

void BM_CalibratedScale(benchmark::State& state) {
  const auto spec = registry_lookup("RegNetY-500MF").spec;
  const auto policy = fast_policy(kFastAlpha);
  for (auto _ : state) benchmark::DoNotOptimize(scale_to_flops(spec, policy, 16.0, true));
}
BENCHMARK(BM_CalibratedScale)->Unit(benchmark::kMillisecond);

void BM_Sweep(benchmark::State& state) {
  const auto spec = build_efficientnet(0);
  std::vector<double> grid;
  for (int k = 0; k <= 28; ++k) grid.push_back(std::pow(2.0, k / 4.0));
  for (auto _ : state) benchmark::DoNotOptimize(sweep(spec, policy_from_name("dWr"), grid));
}
BENCHMARK(BM_Sweep)->Unit(benchmark::kMillisecond);

void BM_Sample(benchmark::State& state) {
  const auto ranges = DesignSpaceRanges::for_kind(RegNetKind::Y, 500e6);
  const auto count = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_design_space(ranges, count, seed++));
}
BENCHMARK(BM_Sample)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_FitRuntime(benchmark::State& state) {
  std::vector<Measurement> data;
  for (int i = 1; i <= 64; ++i) {
    const double a = 1e6 * i;
    data.push_back({"m", "s" + std::to_string(i % 4), 50.0 * a * (1 + i % 4), 0.8 * a, a,
                    0.5 + 2e-6 * a, 128});
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_runtime(data, FeatureSet::ActsPlusFlops));
}
BENCHMARK(BM_FitRuntime);

}  // namespace
BENCHMARK_MAIN();
