#include <benchmark/benchmark.h>

#include <array>
#include <random>

#include "weakiv/conditional.hpp"

using namespace weakiv;

namespace {

Model bench_model(int k) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Matrix g(2 * k, 2 * k);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  ModelConfig c;
  c.k = k;
  c.beta0 = 0.0;
  c.sigma = g * g.transpose() / (2.0 * k) + Matrix::Identity(2 * k, 2 * k);
  return make_model(c);
}

void BM_ConditionalCriticalValue(benchmark::State& state) {
  const auto kind = static_cast<TestKind>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  const Model model = bench_model(k);
  const Vector t = Vector::Constant(k, 1.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conditional_critical_value(kind, t, model, 0.05, 1000, 7));
  }
}
BENCHMARK(BM_ConditionalCriticalValue)
    ->Args({static_cast<int>(TestKind::CLR), 2})
    ->Args({static_cast<int>(TestKind::CLR), 4})
    ->Args({static_cast<int>(TestKind::CQLR1), 4})
    ->Unit(benchmark::kMillisecond);

void BM_ConditionalDecisions(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const Model model = bench_model(k);
  const QProfile profile(model.config);
  const ConditionalKernel kernel(model, profile);
  const ConditionalLaw law(kernel, TestKind::CLR, Vector::Constant(k, 1.5));
  const std::array<double, 2> alphas = {0.01, 0.05};
  std::uint64_t key = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(conditional_decisions(law, 6.0, alphas, 1000, ++key));
  }
}
BENCHMARK(BM_ConditionalDecisions)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
