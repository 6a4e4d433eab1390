#include <benchmark/benchmark.h>

#include <random>

#include <openqs/master_equations.hpp>
#include <openqs/open_quantum.hpp>

using namespace openqs;

namespace {

SEModel model(int de, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Mat he = random_hermitian(de, rng);
  return SEModel::single(0.5 * sigma_z(), he, sigma_x(), random_hermitian(de, rng), 0.2, gibbs_state(he, 1.0));
}

void BM_exact_map(benchmark::State& st) {
  auto m = model(static_cast<int>(st.range(0)), 1);
  for (auto _ : st) benchmark::DoNotOptimize(exact_dynamical_map(m, 3.0));
}
BENCHMARK(BM_exact_map)->Arg(2)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_quasi_probability(benchmark::State& st) {
  auto m = model(4, 2);
  std::vector<double> times;
  for (int k = static_cast<int>(st.range(0)); k > 0; --k) times.push_back(0.5 * k);
  for (auto _ : st) benchmark::DoNotOptimize(quasi_probability(m, times));
}
BENCHMARK(BM_quasi_probability)->DenseRange(1, 3)->Unit(benchmark::kMicrosecond);

void BM_second_order_map(benchmark::State& st) {
  auto m = model(4, 3);
  for (auto _ : st) benchmark::DoNotOptimize(second_order_map(m, 2.0, {Method::rk4, 1e-2}));
}
BENCHMARK(BM_second_order_map)->Unit(benchmark::kMillisecond);

void BM_davies(benchmark::State& st) {
  auto m = model(8, 4);
  for (auto _ : st) benchmark::DoNotOptimize(davies_from_model(m, {}));
}
BENCHMARK(BM_davies)->Unit(benchmark::kMillisecond);

}  // namespace
