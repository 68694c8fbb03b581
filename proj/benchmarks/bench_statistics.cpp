#include <benchmark/benchmark.h>

#include <random>

#include "weakiv/q_profile.hpp"
#include "weakiv/statistics.hpp"

using namespace weakiv;

namespace {

ModelConfig bench_config(int k) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Matrix g(2 * k, 2 * k);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  ModelConfig c;
  c.k = k;
  c.beta0 = 0.5;
  c.sigma = g * g.transpose() / (2.0 * k) + Matrix::Identity(2 * k, 2 * k);
  return c;
}

Vector bench_draw(int k) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  Vector v(2 * k);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
  return v;
}

void BM_LrStat(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const ModelConfig c = bench_config(k);
  const Vector v = bench_draw(k);
  for (auto _ : state) benchmark::DoNotOptimize(lr_stat(v, c));
}
BENCHMARK(BM_LrStat)->Arg(1)->Arg(2)->Arg(4)->Arg(10);

void BM_ProfileMinimize(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const ModelConfig c = bench_config(k);
  const QProfile profile(c);
  QProfile::Workspace ws(k);
  const Vector v = bench_draw(k);
  for (auto _ : state) benchmark::DoNotOptimize(profile.minimize(v, ws));
}
BENCHMARK(BM_ProfileMinimize)->Arg(2)->Arg(4)->Arg(10);

void BM_ComputeStatistics(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const Model model = make_model(bench_config(k));
  const QProfile profile(model.config);
  const Vector v = bench_draw(k);
  for (auto _ : state) benchmark::DoNotOptimize(compute_statistics(v, model, profile));
}
BENCHMARK(BM_ComputeStatistics)->Arg(2)->Arg(10);

}  // namespace
