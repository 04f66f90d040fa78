// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include <benchmark/benchmark.h>

#include "noisy_anchor/evalkit.hpp"
#include "noisy_anchor/prng.hpp"
#include "noisy_anchor/verify.hpp"

namespace {

void BM_Nms(benchmark::State& state) {
    na::SplitMix64 rng(11);
    const auto dets =
        na::verify::random_detections(rng, static_cast<int>(state.range(0)), 3, 128, 128);
    for (auto _ : state) {
        benchmark::DoNotOptimize(na::nms(dets, 0.5));
    }
}
BENCHMARK(BM_Nms)->Arg(50)->Arg(300);

void BM_AveragePrecision(benchmark::State& state) {
    na::SplitMix64 rng(12);
    std::vector<std::vector<na::Detection>> dets(50);
    std::vector<std::vector<na::GtObject>> gts(50);
    for (std::size_t s = 0; s < 50; ++s) {
        dets[s] = na::verify::random_detections(rng, 100, 3, 128, 128);
        gts[s] = na::verify::random_gts(rng, 4, 3, 128, 128);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(na::average_precision(dets, gts, 0.5));
    }
}
BENCHMARK(BM_AveragePrecision);

void BM_FullEvaluate(benchmark::State& state) {
    na::SplitMix64 rng(13);
    std::vector<std::vector<na::Detection>> dets(20);
    std::vector<std::vector<na::GtObject>> gts(20);
    for (std::size_t s = 0; s < 20; ++s) {
        dets[s] = na::verify::random_detections(rng, 300, 3, 128, 128);
        gts[s] = na::verify::random_gts(rng, 4, 3, 128, 128);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(na::evaluate(dets, gts));
    }
}
BENCHMARK(BM_FullEvaluate);

}  // namespace
