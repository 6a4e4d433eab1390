#include <benchmark/benchmark.h>

#include <openqs/propagators.hpp>
#include <openqs/stochastic_maps.hpp>

using namespace openqs;

namespace {

StochasticHamiltonian qubit(double lambda) { return {0.5 * sigma_z(), 0.5 * sigma_x(), lambda, RtnSpec{1.0, 0.0}}; }

void BM_propagate(benchmark::State& st) {
  const auto m = static_cast<Method>(st.range(0));
  auto g = hamiltonian_generator(2, [](double t) -> Mat { return 0.5 * (std::cos(t) * sigma_x() - std::sin(t) * sigma_y()); });
  for (auto _ : st) benchmark::DoNotOptimize(propagate(g, 0, 5, {m, 1e-3}));
}
BENCHMARK(BM_propagate)->Arg(static_cast<int>(Method::euler))->Arg(static_cast<int>(Method::crank_nicolson))
    ->Arg(static_cast<int>(Method::rk4))->Unit(benchmark::kMillisecond);

void BM_sample_average(benchmark::State& st) {
  auto h = qubit(1.0);
  SampleAverageOptions opt{st.range(0), 42, 1};
  for (auto _ : st) benchmark::DoNotOptimize(sample_average_map(h, 2.0, {Method::rk4, 1e-2}, opt));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_sample_average)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_truncated_map(benchmark::State& st) {
  auto h = qubit(0.3);
  SuperCumulantOptions opt{static_cast<int>(st.range(0))};
  for (auto _ : st) benchmark::DoNotOptimize(truncated_map(h, opt, 2.0, {Method::rk4, 1e-2}));
}
BENCHMARK(BM_truncated_map)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_coherence_rtn(benchmark::State& st) {
  RtnSpec s{1.0, 0.3};
  double t = 0.0;
  for (auto _ : st) benchmark::DoNotOptimize(coherence_rtn(s, 0.7, t += 1e-3));
}
BENCHMARK(BM_coherence_rtn);

}  // namespace

BENCHMARK_MAIN();
