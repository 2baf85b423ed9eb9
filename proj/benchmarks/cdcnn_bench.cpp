#include <benchmark/benchmark.h>

#include "cdcnn/cdcnn.hpp"
#include "cdcnn/layers.hpp"

using namespace cdcnn;

namespace {

Tensor uniform(const Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(shape);
  for (auto& v : t.data()) v = rng.uniform(-1.0f, 1.0f);
  return t;
}

// Args: batch, dilation. Shapes match one hidden block of the default model.
void BM_ConvForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const layers::ConvSpec spec{64, 64, 3, static_cast<std::size_t>(state.range(1))};
  const Tensor x = uniform({n, 64, 160}, 1);
  const Tensor w = uniform(spec.weight_shape(), 2);
  for (auto _ : state) benchmark::DoNotOptimize(layers::conv1d_circular_forward(x, spec, w));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ConvForward)->Args({1, 1})->Args({64, 1})->Args({64, 8});

void BM_ConvBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const layers::ConvSpec spec{64, 64, 3, 4};
  const Tensor x = uniform({n, 64, 160}, 3);
  const Tensor w = uniform(spec.weight_shape(), 4);
  const Tensor gy = uniform({n, 64, 160}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(layers::conv1d_circular_backward(gy, x, w, spec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ConvBackward)->Arg(1)->Arg(64);

void BM_ModelInfer(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(6);
  const ModelParams p = init_params(ModelConfig{}, rng);
  const Tensor x = uniform({n, 24, 160}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(infer(p, x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ModelInfer)->Arg(1)->Arg(64)->Unit(benchmark::kMillisecond);

// Forward, loss, backward and one Adam update on a default-size batch.
void BM_TrainStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(8);
  ModelParams p = init_params(ModelConfig{}, rng);
  const Tensor x = uniform({n, 24, 160}, 9);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 4);
  AdamState adam;
  Rng dropout(10);
  for (auto _ : state) {
    BasicForwardCache<float> cache;
    const Tensor logits = forward(p, x, Mode::training, dropout, &cache);
    const auto ce = layers::softmax_cross_entropy(logits, labels);
    const auto grads = backward(p, cache, ce.grad_logits);
    adam_step(learnable_params(p), grads.params, adam);
    benchmark::DoNotOptimize(ce.loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_TrainStep)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
