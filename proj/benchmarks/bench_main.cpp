#include <benchmark/benchmark.h>

#include "signcraft/layers.hpp"
#include "signcraft/model.hpp"
#include "signcraft/train.hpp"

using namespace signcraft;

namespace {

Tensor random_float(const Shape& shape, Rng& rng) {
    Tensor t(shape);
    for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

// Second conv of the canonical stack: 32 -> 64 channels on 15x15 maps.
void BM_ConvForward(benchmark::State& state) {
    Rng rng(1);
    const auto batch = static_cast<std::size_t>(state.range(0));
    const Tensor in = random_float({batch, 32, 15, 15}, rng);
    const Tensor w = random_float({64, 32, 3, 3}, rng), b = random_float({64}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d_forward(in, w, b));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConvForward)->Arg(1)->Arg(32);

void BM_ConvBackward(benchmark::State& state) {
    Rng rng(2);
    const auto batch = static_cast<std::size_t>(state.range(0));
    const Tensor in = random_float({batch, 32, 15, 15}, rng);
    const Tensor w = random_float({64, 32, 3, 3}, rng);
    const Tensor g = random_float({batch, 64, 13, 13}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d_backward(in, w, g));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConvBackward)->Arg(1)->Arg(32);

void BM_DenseForward(benchmark::State& state) {
    Rng rng(3);
    const Tensor x = random_float({32, 2304}, rng);
    const Tensor w = random_float({2304, 64}, rng), b = random_float({64}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(ops::dense_forward(x, w, b));
}
BENCHMARK(BM_DenseForward);

// One full optimizer step of the canonical model on a batch of 32.
void BM_TrainStep(benchmark::State& state) {
    Rng rng(4);
    Model model = Model::initialize(canonical_architecture(6), rng);
    const Tensor x = random_float({32, 3, 32, 32}, rng);
    std::vector<std::size_t> y(32);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 6;
    const TrainConfig cfg;
    for (auto _ : state) {
        const ForwardCache cache = model.forward(x, Phase::Train, rng);
        const auto ce = cross_entropy(cache.probabilities, std::span<const std::size_t>(y));
        const Gradients grads = model.backward(cache, ce.logits_grad);
        model.set_step(model.step() + 1);
        for (std::size_t l = 0; l < model.states().size(); ++l)
            adam_step(model.state(l), grads.layers[l], model.step(), cfg);
    }
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
