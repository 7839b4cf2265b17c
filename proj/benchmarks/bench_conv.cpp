#include <benchmark/benchmark.h>

#include "eyolo/conv.hpp"
#include "eyolo/network.hpp"
#include "eyolo/ops.hpp"
#include "eyolo/rng.hpp"

using namespace eyolo;

namespace {

Tensor random_tensor(Rng& rng, Shape4 shape) {
    std::vector<double> values(shape.count());
    for (double& v : values) v = rng.uniform(-1.0, 1.0);
    return Tensor::from_values(shape, std::move(values));
}

void BM_Conv3x3(benchmark::State& state) {
    const int ch = static_cast<int>(state.range(0));
    const int size = static_cast<int>(state.range(1));
    Rng rng(1);
    const Tensor input = random_tensor(rng, {1, ch, size, size});
    const ConvParams p = ConvParams::same(random_tensor(rng, {ch, ch, 3, 3}),
                                          Tensor::zeros(Shape4{1, ch, 1, 1}));
    NoGradGuard guard;
    for (auto _ : state) {
        Tensor out = conv2d(input, p);
        benchmark::DoNotOptimize(out);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ch) * ch * 9 * size *
                            size);
}

void BM_Conv1x1(benchmark::State& state) {
    const int ch = static_cast<int>(state.range(0));
    const int size = static_cast<int>(state.range(1));
    Rng rng(2);
    const Tensor input = random_tensor(rng, {1, ch, size, size});
    const ConvParams p = ConvParams::same(random_tensor(rng, {ch, ch, 1, 1}),
                                          Tensor::zeros(Shape4{1, ch, 1, 1}));
    NoGradGuard guard;
    for (auto _ : state) {
        Tensor out = conv2d(input, p);
        benchmark::DoNotOptimize(out);
    }
}

void BM_TinyForward(benchmark::State& state) {
    Network net = build_network(NetConfig::tiny(), 3);
    Rng rng(4);
    const Tensor input = random_tensor(rng, {1, 4, 128, 128});
    NoGradGuard guard;
    for (auto _ : state) {
        Tensor out = net.forward(input);
        benchmark::DoNotOptimize(out);
    }
}

} // namespace

BENCHMARK(BM_Conv3x3)->Args({16, 64})->Args({32, 32})->Args({64, 16});
BENCHMARK(BM_Conv1x1)->Args({64, 32})->Args({128, 16});
BENCHMARK(BM_TinyForward)->Unit(benchmark::kMillisecond);
