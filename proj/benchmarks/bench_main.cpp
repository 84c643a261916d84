#include <vector>

#include <benchmark/benchmark.h>

#include "facedet/anchors.hpp"
#include "facedet/losses.hpp"
#include "facedet/postprocess.hpp"
#include "facedet/rng.hpp"

using facedet::Box;
using facedet::Detection;

namespace {

std::vector<Box> random_boxes(size_t n, double extent, std::uint64_t seed) {
    facedet::Rng rng(seed);
    std::vector<Box> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const double w = rng.uniform(4.0, 64.0);
        const double h = rng.uniform(4.0, 64.0);
        const double x = rng.uniform(0.0, extent - w);
        const double y = rng.uniform(0.0, extent - h);
        out.push_back(Box(x, y, x + w, y + h));
    }
    return out;
}

void bm_iou(benchmark::State& state) {
    const auto boxes = random_boxes(2048, 512.0, 1);
    size_t i = 0;
    for (auto _ : state) {
        const double v = facedet::iou(boxes[i % 2048], boxes[(i * 7 + 3) % 2048]);
        benchmark::DoNotOptimize(v);
        ++i;
    }
}
BENCHMARK(bm_iou);

void bm_build_lattice(benchmark::State& state) {
    facedet::PyramidConfig cfg;
    cfg.input_width = static_cast<double>(state.range(0));
    cfg.input_height = cfg.input_width;
    for (auto _ : state) {
        const auto lattice = facedet::build_lattice(cfg);
        benchmark::DoNotOptimize(lattice.anchors.data());
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<int64_t>(facedet::build_lattice(cfg).size()));
}
BENCHMARK(bm_build_lattice)->Arg(256)->Arg(1024);

void bm_assign(benchmark::State& state) {
    facedet::PyramidConfig cfg;
    cfg.input_width = 256.0;
    cfg.input_height = 256.0;
    const auto lattice = facedet::build_lattice(cfg);
    const auto gts = random_boxes(static_cast<size_t>(state.range(0)), 256.0, 2);
    const facedet::StepThresholds th{0.3, 0.7};
    for (auto _ : state) {
        const auto labels = facedet::assign(lattice.anchors, gts, th);
        benchmark::DoNotOptimize(labels.positives());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(lattice.size()));
}
BENCHMARK(bm_assign)->Arg(4)->Arg(32);

void bm_nms(benchmark::State& state) {
    facedet::Rng rng(3);
    std::vector<Detection> dets;
    for (size_t i = 0; i < static_cast<size_t>(state.range(0)); ++i) {
        const double w = rng.uniform(8.0, 48.0);
        const double x = rng.uniform(0.0, 480.0);
        const double y = rng.uniform(0.0, 480.0);
        dets.push_back({Box(x, y, x + w, y + w), rng.uniform(0.01, 1.0)});
    }
    for (auto _ : state) {
        const auto kept = facedet::nms(dets, 0.3);
        benchmark::DoNotOptimize(kept.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_nms)->Arg(200)->Arg(1000);

void bm_bbox_vote(benchmark::State& state) {
    facedet::Rng rng(4);
    std::vector<Detection> dets;
    for (size_t i = 0; i < 500; ++i) {
        const double w = rng.uniform(8.0, 48.0);
        const double x = rng.uniform(0.0, 480.0);
        const double y = rng.uniform(0.0, 480.0);
        dets.push_back({Box(x, y, x + w, y + w), rng.uniform(0.01, 1.0)});
    }
    for (auto _ : state) {
        const auto merged = facedet::bbox_vote(dets, 0.5);
        benchmark::DoNotOptimize(merged.data());
    }
}
BENCHMARK(bm_bbox_vote);

void bm_focal_batch(benchmark::State& state) {
    facedet::Rng rng(5);
    std::vector<facedet::ClassSample> samples;
    for (int i = 0; i < 4096; ++i)
        samples.push_back({rng.uniform(0.01, 0.99), rng.uniform() < 0.5 ? 1 : -1});
    const facedet::FocalParams fp;
    std::vector<double> values(samples.size());
    for (auto _ : state) {
        for (size_t i = 0; i < samples.size(); ++i)
            values[i] = facedet::focal_loss(samples[i], fp).value;
        const double total = facedet::pairwise_sum(values);
        benchmark::DoNotOptimize(total);
    }
    state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(bm_focal_batch);

}  // namespace

BENCHMARK_MAIN();
