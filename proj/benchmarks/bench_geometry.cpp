// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include <benchmark/benchmark.h>

#include "noisy_anchor/geometry.hpp"
#include "noisy_anchor/prng.hpp"
#include "noisy_anchor/verify.hpp"

namespace {

std::vector<na::Box> random_boxes(int n, std::uint64_t seed) {
    na::SplitMix64 rng(seed);
    std::vector<na::Box> boxes;
    boxes.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) boxes.push_back(na::verify::random_box(rng, 128, 128, 4, 64));
    return boxes;
}

void BM_Iou(benchmark::State& state) {
    const auto boxes = random_boxes(256, 1);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(na::iou(boxes[i % 256], boxes[(i + 77) % 256]));
        ++i;
    }
}
BENCHMARK(BM_Iou);

void BM_IouMatrix(benchmark::State& state) {
    const auto anchors = random_boxes(static_cast<int>(state.range(0)), 2);
    const auto gts = random_boxes(4, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(na::iou_matrix(anchors, gts));
    }
}
BENCHMARK(BM_IouMatrix)->Arg(512)->Arg(2880);

void BM_EncodeDecode(benchmark::State& state) {
    const auto boxes = random_boxes(256, 4);
    std::size_t i = 0;
    for (auto _ : state) {
        const na::Box& a = boxes[i % 255];
        benchmark::DoNotOptimize(na::decode(a, na::encode(a, boxes[(i + 1) % 256])));
        ++i;
    }
}
BENCHMARK(BM_EncodeDecode);

}  // namespace
