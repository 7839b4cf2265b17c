#include <benchmark/benchmark.h>

#include <vector>

#include "eyolo/geometry.hpp"
#include "eyolo/rng.hpp"

using namespace eyolo;

namespace {

std::vector<Box3D> clustered_boxes(int count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Box3D> boxes;
    boxes.reserve(count);
    while (static_cast<int>(boxes.size()) < count) {
        const double cx = rng.uniform(0.1, 0.9);
        const double cy = rng.uniform(0.1, 0.9);
        const double cz = rng.uniform(0.1, 0.9);
        for (int j = 0; j < 4 && static_cast<int>(boxes.size()) < count; ++j) {
            Box3D b = Box3D::with_class(static_cast<int>(rng.uniform_int(0, 1)), 2,
                                        cx + rng.uniform(-0.05, 0.05),
                                        cy + rng.uniform(-0.05, 0.05),
                                        cz + rng.uniform(-0.05, 0.05), rng.uniform(0.1, 0.3),
                                        rng.uniform(0.1, 0.3), rng.uniform(0.1, 0.3));
            b.confidence = rng.next_f64();
            boxes.push_back(std::move(b));
        }
    }
    return boxes;
}

void BM_Iou3dPairwise(benchmark::State& state) {
    const auto boxes = clustered_boxes(static_cast<int>(state.range(0)), 11);
    for (auto _ : state) {
        double acc = 0.0;
        for (std::size_t i = 0; i < boxes.size(); ++i)
            for (std::size_t j = i + 1; j < boxes.size(); ++j) acc += iou3d(boxes[i], boxes[j]);
        benchmark::DoNotOptimize(acc);
    }
    const std::int64_t n = state.range(0);
    state.SetItemsProcessed(state.iterations() * n * (n - 1) / 2);
}

// The suppression-cost comparison: one volumetric IoU per pair vs two
// planar IoU evaluations per pair over the same candidates.
void BM_Nms3dSinglePass(benchmark::State& state) {
    const auto boxes = clustered_boxes(static_cast<int>(state.range(0)), 12);
    NmsConfig cfg;
    cfg.confidence_floor = 0.0;
    for (auto _ : state) {
        auto kept = nms3d(boxes, cfg);
        benchmark::DoNotOptimize(kept);
    }
}

void BM_Nms2dTwoPass(benchmark::State& state) {
    const auto boxes = clustered_boxes(static_cast<int>(state.range(0)), 12);
    NmsConfig cfg;
    cfg.confidence_floor = 0.0;
    for (auto _ : state) {
        auto kept = nms_two_pass_2d(boxes, cfg);
        benchmark::DoNotOptimize(kept);
    }
}

} // namespace

BENCHMARK(BM_Iou3dPairwise)->Arg(128)->Arg(512);
BENCHMARK(BM_Nms3dSinglePass)->Arg(128)->Arg(512)->Arg(2048);
BENCHMARK(BM_Nms2dTwoPass)->Arg(128)->Arg(512)->Arg(2048);

BENCHMARK_MAIN();
