// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include <benchmark/benchmark.h>

#include "noisy_anchor/assignment.hpp"
#include "noisy_anchor/prng.hpp"
#include "noisy_anchor/synthdata.hpp"
#include "noisy_anchor/verify.hpp"

namespace {

struct Fixture {
    na::AnchorSet anchors;
    std::vector<na::Box> gts;
    std::vector<int> gt_classes;
    na::MatrixD probs;
    std::vector<na::BoxDelta> deltas;

    Fixture() {
        anchors = na::generate(na::AnchorConfig{});
        na::SplitMix64 rng(9);
        for (int j = 0; j < 3; ++j) {
            gts.push_back(na::verify::random_box(rng, 128, 128, 16, 64));
            gt_classes.push_back(static_cast<int>(rng.uniform_int(0, 2)));
        }
        probs = na::MatrixD(anchors.size(), 3);
        for (auto& v : probs.data) v = rng.next_double();
        deltas.resize(anchors.size());
        for (auto& d : deltas) {
            d = na::BoxDelta{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                             rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
        }
    }
};

void BM_SelectPositives(benchmark::State& state) {
    const Fixture fx;
    for (auto _ : state) {
        benchmark::DoNotOptimize(na::select_positives(fx.anchors, fx.gts, 30));
    }
}
BENCHMARK(BM_SelectPositives);

void BM_AssignClean(benchmark::State& state) {
    const Fixture fx;
    const na::AssignParams params;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            na::assign_clean(fx.anchors, fx.gts, fx.gt_classes, fx.probs, fx.deltas, params));
    }
}
BENCHMARK(BM_AssignClean);

void BM_AssignHard(benchmark::State& state) {
    const Fixture fx;
    const na::AssignParams params;
    for (auto _ : state) {
        benchmark::DoNotOptimize(na::assign_hard(fx.anchors, fx.gts, params));
    }
}
BENCHMARK(BM_AssignHard);

}  // namespace
