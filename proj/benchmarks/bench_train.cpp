// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include <benchmark/benchmark.h>

#include "noisy_anchor/model.hpp"
#include "noisy_anchor/prng.hpp"

namespace {

struct TrainFixture {
    na::AnchorSet anchors;
    na::Scene scene;
    na::TrainHyper hp;
    na::TrainState state;

    explicit TrainFixture(int hidden) {
        anchors = na::generate(na::AnchorConfig{});
        na::GenConfig g;
        scene = na::generate_scene(g, anchors, 5);
        na::HeadConfig hc{na::feature_dim(g.num_classes), g.num_classes, hidden, 0.01, 0.01};
        na::SgdConfig opt;
        state = na::TrainState::init(hc, opt, 7);
    }
};

void BM_TrainStepLinear(benchmark::State& state) {
    TrainFixture fx(0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(na::train_step(fx.state, fx.scene, fx.anchors, fx.hp));
    }
}
BENCHMARK(BM_TrainStepLinear);

void BM_TrainStepHidden(benchmark::State& state) {
    TrainFixture fx(16);
    for (auto _ : state) {
        benchmark::DoNotOptimize(na::train_step(fx.state, fx.scene, fx.anchors, fx.hp));
    }
}
BENCHMARK(BM_TrainStepHidden);

void BM_SceneGeneration(benchmark::State& state) {
    const na::AnchorSet anchors = na::generate(na::AnchorConfig{});
    const na::GenConfig g;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(na::generate_scene(g, anchors, seed++));
    }
}
BENCHMARK(BM_SceneGeneration);

}  // namespace
