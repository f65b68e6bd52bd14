#include <benchmark/benchmark.h>

#include <random>

#include "coastal/nn/ops.hpp"

using namespace coastal::nn;

namespace {

Var<float> random_var(Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Tensor<float> t(s);
  for (auto& v : t.values()) v = u(rng);
  return Var<float>(std::move(t), true);
}

// args: spatial size, channels, kernel, groups
void BM_Conv2dForward(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  const int c = static_cast<int>(state.range(1));
  const int k = static_cast<int>(state.range(2));
  const int groups = static_cast<int>(state.range(3));
  const auto x = random_var({1, hw, hw, c}, 1);
  const auto w = random_var({k, k, c / groups, c}, 2);
  const auto b = random_var({1, 1, 1, c}, 3);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, b, 1, groups).value().data());
  state.SetItemsProcessed(state.iterations() * hw * hw);
}
BENCHMARK(BM_Conv2dForward)
    ->Args({128, 16, 3, 1})
    ->Args({128, 16, 3, 16})
    ->Args({128, 16, 1, 1})
    ->Args({256, 72, 1, 1})
    ->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  const int c = static_cast<int>(state.range(1));
  const auto x = random_var({1, hw, hw, c}, 1);
  const auto w = random_var({3, 3, c, c}, 2);
  const auto b = random_var({1, 1, 1, c}, 3);
  Tensor<float> seed({1, hw, hw, c}, 1.0f);
  for (auto _ : state) {
    x.node()->grad = {};
    w.node()->grad = {};
    b.node()->grad = {};
    backward(conv2d(x, w, b), seed);
  }
}
BENCHMARK(BM_Conv2dBackward)->Args({64, 16})->Args({128, 16})->Unit(benchmark::kMillisecond);

void BM_ConvTranspose(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  const int c = static_cast<int>(state.range(1));
  const auto x = random_var({1, hw, hw, c}, 4);
  const auto w = random_var({2, 2, c, c}, 5);
  const auto b = random_var({1, 1, 1, c}, 6);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(conv_transpose2d(x, w, b, 2).value().data());
}
BENCHMARK(BM_ConvTranspose)->Args({64, 16})->Args({128, 72})->Unit(benchmark::kMillisecond);

void BM_Tanh(benchmark::State& state) {
  const auto x = random_var({1, 256, 256, static_cast<int>(state.range(0))}, 7);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(activate(x, Activation::tanh).value().data());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.value().size()));
}
BENCHMARK(BM_Tanh)->Arg(16)->Arg(72);

}  // namespace
