// Serial reference kernels against their OpenMP versions.
#include <benchmark/benchmark.h>

#include <numbers>
#include <random>
#include <vector>

#include "hinfsearch/hinf_oracle.hpp"
#include "hinfsearch/subgrad_bundle.hpp"

using namespace hinfsearch;

namespace {

ClosedLoop random_loop(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MatrixXd A(n, n), C(n, n);
  for (Eigen::Index i = 0; i < A.size(); ++i) A(i) = u(rng);
  for (Eigen::Index i = 0; i < C.size(); ++i) C(i) = u(rng);
  A *= 0.95 / spectral_radius(A);
  return {A, C};
}

template <bool Parallel>
void BM_FrequencySweep(benchmark::State& state) {
  const ClosedLoop cl = random_loop(static_cast<int>(state.range(0)), 1);
  const auto points = static_cast<std::size_t>(state.range(1));
  std::vector<double> w(points), g(points);
  for (std::size_t i = 0; i < points; ++i) {
    w[i] = std::numbers::pi * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::frequency_sweep_omp(cl, w, g);
    } else {
      kernels::frequency_sweep_serial(cl, w, g);
    }
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(points));
}

template <bool Parallel>
void BM_GradientBatch(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const MatrixXd I = MatrixXd::Identity(n, n);
  const ClosedLoop cl = random_loop(n, 2);
  // B = I and K = 0 realize the random loop as a plant.
  const Plant plant(cl.A_cl, I, I, I);
  const GradientOracle grad = make_gradient_oracle(plant);
  Rng rng(3);
  std::vector<MatrixXd> pts;
  for (long i = 0; i < state.range(1); ++i) {
    pts.push_back(sample_ball(MatrixXd::Zero(n, n), 1e-3, rng));
  }
  for (auto _ : state) {
    auto batch = Parallel ? kernels::evaluate_gradients_omp(grad, pts)
                          : kernels::evaluate_gradients_serial(grad, pts);
    benchmark::DoNotOptimize(batch.gradients.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void sweep_args(benchmark::internal::Benchmark* b) {
  for (int n : {3, 10}) {
    for (int pts : {1024, 16384}) b->Args({n, pts});
  }
}

void batch_args(benchmark::internal::Benchmark* b) {
  for (int n : {3, 6}) b->Args({n, 16});
}

}  // namespace

BENCHMARK(BM_FrequencySweep<false>)->Name("sweep/serial")->Apply(sweep_args);
BENCHMARK(BM_FrequencySweep<true>)->Name("sweep/omp")->Apply(sweep_args);
BENCHMARK(BM_GradientBatch<false>)->Name("gradients/serial")->Apply(batch_args);
BENCHMARK(BM_GradientBatch<true>)->Name("gradients/omp")->Apply(batch_args);

BENCHMARK_MAIN();
