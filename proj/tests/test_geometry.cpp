// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include <cmath>

#include <doctest.h>

#include "noisy_anchor/geometry.hpp"
#include "noisy_anchor/prng.hpp"
#include "noisy_anchor/verify.hpp"

using namespace na;

TEST_CASE("iou of identical boxes is 1") {
    const Box a{0, 0, 10, 10};
    CHECK(iou(a, a) == 1.0);
}

TEST_CASE("iou of disjoint boxes is 0") {
    CHECK(iou(Box{0, 0, 10, 10}, Box{20, 20, 30, 30}) == 0.0);
}

TEST_CASE("iou half-overlap hand value") {
    // inter = 50, union = 150
    CHECK(iou(Box{0, 0, 10, 10}, Box{5, 0, 15, 10}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("degenerate boxes are legal and give zero iou") {
    const Box line{5, 5, 5, 10};
    CHECK(iou(line, line) == 0.0);  // union is zero
    CHECK(iou(line, Box{0, 0, 10, 10}) == 0.0);
}

TEST_CASE("iou properties: symmetry, range, translation invariance") {
    SplitMix64 rng(7);
    for (int i = 0; i < 500; ++i) {
        const Box a = verify::random_box(rng, 100, 100, 1, 60);
        const Box b = verify::random_box(rng, 100, 100, 1, 60);
        const double v = iou(a, b);
        CHECK(v == iou(b, a));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);

        const double t = rng.uniform(-30.0, 30.0);
        const Box at{a.x1 + t, a.y1 + t, a.x2 + t, a.y2 + t};
        const Box bt{b.x1 + t, b.y1 + t, b.x2 + t, b.y2 + t};
        CHECK(iou(at, bt) == doctest::Approx(v).epsilon(1e-12));
    }
}

TEST_CASE("iou_matrix shapes and elementwise agreement") {
    CHECK(iou_matrix({Box{0, 0, 1, 1}}, {}).cols == 0);
    CHECK(iou_matrix({}, {}).rows == 0);

    const MatrixD one = iou_matrix({Box{0, 0, 10, 10}}, {Box{0, 0, 10, 10}});
    CHECK(one(0, 0) == 1.0);

    SplitMix64 rng(8);
    std::vector<Box> anchors, gts;
    for (int i = 0; i < 7; ++i) anchors.push_back(verify::random_box(rng, 100, 100, 1, 50));
    for (int j = 0; j < 5; ++j) gts.push_back(verify::random_box(rng, 100, 100, 1, 50));
    const MatrixD m = iou_matrix(anchors, gts);
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        for (std::size_t j = 0; j < gts.size(); ++j) {
            CHECK(m(i, j) == iou(anchors[i], gts[j]));
        }
    }
}

TEST_CASE("encode of a box onto itself is the zero delta") {
    const Box a{3, 4, 13, 24};
    const BoxDelta d = encode(a, a);
    CHECK(d.dx == 0.0);
    CHECK(d.dy == 0.0);
    CHECK(d.dw == 0.0);
    CHECK(d.dh == 0.0);
}

TEST_CASE("decode with zero delta reproduces the anchor bitwise") {
    const Box a{0.1, 0.3, 10.7, 9.9};
    const Box back = decode(a, BoxDelta{});
    CHECK(back == a);
}

TEST_CASE("encode hand value: shifted equal-size target") {
    const BoxDelta d = encode(Box{0, 0, 10, 10}, Box{5, 5, 15, 15});
    CHECK(d.dx == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(d.dy == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(d.dw == 0.0);
    CHECK(d.dh == 0.0);
}

TEST_CASE("decode(encode) round trip within 1e-9 relative") {
    SplitMix64 rng(9);
    for (int i = 0; i < 1000; ++i) {
        const Box anchor = verify::random_box(rng, 200, 200, 2, 80);
        const Box target = verify::random_box(rng, 200, 200, 2, 80);
        const Box back = decode(anchor, encode(anchor, target));
        for (auto [got, want] : {std::pair{back.x1, target.x1}, {back.y1, target.y1},
                                 {back.x2, target.x2}, {back.y2, target.y2}}) {
            CHECK(std::fabs(got - want) <= 1e-9 * std::max(1.0, std::fabs(want)));
        }
    }
}

TEST_CASE("decode clamps runaway size deltas") {
    const Box a{0, 0, 10, 10};
    const Box wild = decode(a, BoxDelta{0, 0, 50.0, 50.0});
    CHECK(wild.width() == doctest::Approx(10.0 * 1000.0 / 16.0));
    CHECK(std::isfinite(wild.x2));
}

TEST_CASE("zero-area anchors are rejected by encode and decode") {
    const Box flat{0, 0, 10, 0};
    CHECK_THROWS_AS(encode(flat, Box{0, 0, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(decode(flat, BoxDelta{}), std::invalid_argument);
}

TEST_CASE("clip_box clamps into the image") {
    const Box c = clip_box(Box{-5, -5, 300, 40}, 100, 50);
    CHECK(c == Box{0, 0, 100, 40});
}
