#include <benchmark/benchmark.h>

#include "nmatch/rng.hpp"
#include "nmatch/tensor.hpp"

using namespace nmatch;

namespace {

Tensor random_tensor(Rng& rng, Shape shape) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-1, 1);
  return t;
}

void BM_matmul(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  Rng rng(1, "bench");
  auto a = random_tensor(rng, {n, n});
  auto b = random_tensor(rng, {n, n});
  NoGradGuard ng;
  for (auto _ : state) {
    auto c = matmul(a, b);
    benchmark::DoNotOptimize(c.data().data());
  }
  state.SetItemsProcessed(state.iterations() * 2L * n * n * n);
}
BENCHMARK(BM_matmul)->Arg(64)->Arg(256);

void BM_conv2d(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  Rng rng(2, "bench");
  auto x = random_tensor(rng, {n, n, 16});
  auto k = random_tensor(rng, {3, 3, 16, 16});
  NoGradGuard ng;
  for (auto _ : state) {
    auto y = conv2d(x, k, 1, Padding::Same);
    benchmark::DoNotOptimize(y.data().data());
  }
}
BENCHMARK(BM_conv2d)->Arg(32)->Arg(64);

void BM_softmax(benchmark::State& state) {
  Rng rng(3, "bench");
  auto x = random_tensor(rng, {256, 256});
  NoGradGuard ng;
  for (auto _ : state) {
    auto y = softmax(x, 1);
    benchmark::DoNotOptimize(y.data().data());
  }
}
BENCHMARK(BM_softmax);

}  // namespace

BENCHMARK_MAIN();
