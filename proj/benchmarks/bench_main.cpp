#include <random>

#include <benchmark/benchmark.h>

#include "bsecnn/bagging.hpp"
#include "bsecnn/forest.hpp"
#include "bsecnn/layers.hpp"
#include "bsecnn/model.hpp"
#include "bsecnn/train.hpp"

using namespace bsecnn;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  Tensor t(std::move(shape));
  for (auto& x : t.data()) x = dist(engine);
  return t;
}

// args: side, input channels, output channels
void BM_ConvForward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto cin = static_cast<std::size_t>(state.range(1)), cout = static_cast<std::size_t>(state.range(2));
  const auto x = random_tensor({side, side, cin}, 1);
  const auto w = random_tensor({3, 3, cin, cout}, 2);
  const auto b = random_tensor({cout}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward(x, w, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>((side - 2) * (side - 2) * 9 * cin * cout));
}
BENCHMARK(BM_ConvForward)->Args({32, 1, 8})->Args({15, 8, 16})->Args({56, 32, 64});

void BM_ConvBackward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto cin = static_cast<std::size_t>(state.range(1)), cout = static_cast<std::size_t>(state.range(2));
  const auto x = random_tensor({side, side, cin}, 1);
  const auto w = random_tensor({3, 3, cin, cout}, 2);
  const auto b = random_tensor({cout}, 3);
  const auto up = random_tensor({side - 2, side - 2, cout}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_backward(up, x, w, b));
}
BENCHMARK(BM_ConvBackward)->Args({32, 1, 8})->Args({15, 8, 16});

void BM_DenseForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0)), m = static_cast<std::size_t>(state.range(1));
  const auto x = random_tensor({n}, 1);
  const auto w = random_tensor({n, m}, 2);
  const auto b = random_tensor({m}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(dense_forward(x, w, b));
}
BENCHMARK(BM_DenseForward)->Args({576, 64})->Args({18432, 512});

void BM_ScaledCnnTrainStep(benchmark::State& state) {
  const auto spec = build_scaled_cnn({32, 32, 1}, {8, 16}, 5, 64);
  const auto params = init_params<float>(spec, 0);
  const auto batch = random_tensor({32, 32, 32, 1}, 5);
  std::vector<int> labels(32);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 5);
  for (auto _ : state) {
    const auto probs = predict_probs(spec, params, batch);
    benchmark::DoNotOptimize(backward_batch(spec, params, batch, softmax_cce_logit_grad(probs, labels)));
  }
}
BENCHMARK(BM_ScaledCnnTrainStep)->Unit(benchmark::kMillisecond);

void BM_ForestFit(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 engine(7);
  std::uniform_real_distribution<double> dist(0, 1);
  FeatureMatrix features(rows, 50);
  for (auto& v : features.values) v = dist(engine);
  std::vector<int> labels(rows);
  for (std::size_t r = 0; r < rows; ++r) labels[r] = static_cast<int>(features.at(r, 0) * 5) % 5;
  ForestParams params;
  params.n_trees = 20;
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(features, labels, params, 5));
}
BENCHMARK(BM_ForestFit)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
