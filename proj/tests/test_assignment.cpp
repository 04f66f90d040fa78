// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include <algorithm>
#include <cmath>
#include <numeric>

#include <doctest.h>

#include "noisy_anchor/assignment.hpp"
#include "noisy_anchor/prng.hpp"
#include "noisy_anchor/verify.hpp"

using namespace na;

namespace {

AnchorSet make_set(std::vector<Box> boxes) {
    AnchorSet s;
    s.level_of.assign(boxes.size(), 0);
    s.boxes = std::move(boxes);
    return s;
}

}  // namespace

TEST_CASE("hard assignment follows the threshold rule") {
    // Anchor (0,0,10,10) against height-trimmed copies gives exact IoUs.
    const AnchorSet anchors = make_set({Box{0, 0, 10, 10}});
    AssignParams params;  // fg 0.5, bg 0.4

    SUBCASE("IoU 0.6 is foreground") {
        const HardAssignment h = assign_hard(anchors, {Box{0, 0, 10, 6}}, params);
        CHECK(h.label[0] == 1);
        CHECK(h.matched_gt[0] == 0);
    }
    SUBCASE("IoU 0.45 lands in the ignore band") {
        const HardAssignment h = assign_hard(anchors, {Box{0, 0, 10, 4.5}}, params);
        CHECK(h.label[0] == -1);
        CHECK(h.matched_gt[0] == -1);
    }
    SUBCASE("IoU 0.2 is background") {
        const HardAssignment h = assign_hard(anchors, {Box{0, 0, 10, 2}}, params);
        CHECK(h.label[0] == 0);
    }
    SUBCASE("no ground truth means everything is background") {
        const HardAssignment h = assign_hard(anchors, {}, params);
        CHECK(h.label[0] == 0);
    }
}

TEST_CASE("hard assignment matches the argmax ground truth") {
    const AnchorSet anchors = make_set({Box{0, 0, 10, 10}});
    const std::vector<Box> gts = {Box{0, 0, 10, 6}, Box{0, 0, 10, 8}};
    const HardAssignment h = assign_hard(anchors, gts, AssignParams{});
    CHECK(h.label[0] == 1);
    CHECK(h.matched_gt[0] == 1);  // IoU 0.8 beats 0.6
}

TEST_CASE("select_positives takes the top-N per ground truth") {
    const AnchorSet anchors =
        make_set({Box{0, 0, 10, 9}, Box{0, 0, 10, 8}, Box{0, 0, 10, 1}});  // IoUs .9 .8 .1
    const auto m = select_positives(anchors, {Box{0, 0, 10, 10}}, 2);
    REQUIRE(m.size() == 2);
    CHECK(m.at(0) == 0);
    CHECK(m.at(1) == 0);
}

TEST_CASE("select_positives with no ground truth is empty") {
    const AnchorSet anchors = make_set({Box{0, 0, 10, 10}});
    CHECK(select_positives(anchors, {}, 30).empty());
}

TEST_CASE("cross-GT conflicts go to the higher IoU, ties to the lower index") {
    // One anchor, two ground truths with IoU 0.7 and 0.9.
    const AnchorSet anchors = make_set({Box{0, 0, 10, 10}});
    const auto m = select_positives(anchors, {Box{0, 0, 10, 7}, Box{0, 0, 10, 9}}, 1);
    REQUIRE(m.size() == 1);
    CHECK(m.at(0) == 1);

    // Exact tie: both ground truths identical.
    const auto tie = select_positives(anchors, {Box{0, 0, 10, 8}, Box{0, 0, 10, 8}}, 1);
    CHECK(tie.at(0) == 0);
}

TEST_CASE("fewer anchors than N takes them all") {
    const AnchorSet anchors = make_set({Box{0, 0, 10, 9}, Box{0, 0, 10, 8}});
    CHECK(select_positives(anchors, {Box{0, 0, 10, 10}}, 30).size() == 2);
}

TEST_CASE("zero-IoU anchors are positives by default but can be floored away") {
    const AnchorSet anchors = make_set({Box{0, 0, 10, 9}, Box{50, 50, 60, 60}});
    const auto all = select_positives(anchors, {Box{0, 0, 10, 10}}, 2, 0.0);
    CHECK(all.size() == 2);  // faithful to the top-N rule even at IoU 0
    const auto floored = select_positives(anchors, {Box{0, 0, 10, 10}}, 2, 0.05);
    CHECK(floored.size() == 1);
}

TEST_CASE("positive count never exceeds N per ground truth") {
    SplitMix64 rng(11);
    AnchorConfig ac;
    ac.levels = {{8.0, 8.0}};
    ac.image_width = 64;
    ac.image_height = 64;
    const AnchorSet anchors = generate(ac);
    for (int rep = 0; rep < 50; ++rep) {
        const int n_gts = static_cast<int>(rng.uniform_int(1, 4));
        std::vector<Box> gts;
        for (int j = 0; j < n_gts; ++j) gts.push_back(verify::random_box(rng, 64, 64, 8, 40));
        const int top_n = static_cast<int>(rng.uniform_int(1, 20));
        const auto m = select_positives(anchors, gts, top_n);
        CHECK(m.size() <= static_cast<std::size_t>(top_n) * gts.size());
    }
}

TEST_CASE("select_positives is permutation invariant as a box->gt set") {
    SplitMix64 rng(12);
    std::vector<Box> boxes;
    for (int i = 0; i < 40; ++i) boxes.push_back(verify::random_box(rng, 64, 64, 4, 40));
    const std::vector<Box> gts = {verify::random_box(rng, 64, 64, 10, 40),
                                  verify::random_box(rng, 64, 64, 10, 40)};

    std::vector<std::size_t> perm(boxes.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i) {
        std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.next_below(i))]);
    }
    std::vector<Box> shuffled(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) shuffled[perm[i]] = boxes[i];

    auto as_pairs = [&gts](const AnchorSet& set, const std::map<int, int>& m) {
        std::vector<std::pair<std::array<double, 4>, int>> pairs;
        for (const auto& [a, g] : m) {
            const Box& b = set.boxes[static_cast<std::size_t>(a)];
            pairs.push_back({{b.x1, b.y1, b.x2, b.y2}, g});
        }
        std::sort(pairs.begin(), pairs.end());
        (void)gts;
        return pairs;
    };

    const AnchorSet set_a = make_set(boxes);
    const AnchorSet set_b = make_set(shuffled);
    CHECK(as_pairs(set_a, select_positives(set_a, gts, 5)) ==
          as_pairs(set_b, select_positives(set_b, gts, 5)));
}

TEST_CASE("cleanliness is the convex combination") {
    CHECK(cleanliness(0.8, 0.4, 0.75) == doctest::Approx(0.7).epsilon(1e-15));

    SplitMix64 rng(13);
    for (int i = 0; i < 200; ++i) {
        const double loc = rng.next_double();
        const double cls = rng.next_double();
        CHECK(cleanliness(loc, cls, 1.0) == loc);  // bitwise at the extremes
        CHECK(cleanliness(loc, cls, 0.0) == cls);
        const double c = cleanliness(loc, cls, rng.next_double());
        CHECK(c >= 0.0);
        CHECK(c <= 1.0);
    }
}

TEST_CASE("cleanliness is strictly increasing in loc_a when alpha > 0") {
    const double base = cleanliness(0.3, 0.5, 0.75);
    CHECK(cleanliness(0.31, 0.5, 0.75) > base);
}

TEST_CASE("reweight hand values and degeneracies") {
    SUBCASE("gamma 0 gives exact ones") {
        const auto r = reweight({0.2, 0.9, 0.55}, {0.1, 0.8, 0.4}, 0.75, 0.0, 1e-4);
        for (double v : r) CHECK(v == 1.0);
    }
    SUBCASE("single positive normalizes to 1") {
        const auto r = reweight({0.9}, {0.2}, 0.75, 1.0, 1e-4);
        CHECK(r[0] == 1.0);
    }
    SUBCASE("raw weights 2 and 4 normalize to 2/3 and 4/3") {
        // alpha = 1 makes raw = f(loc): f(0.5) = 2, f(0.75) = 4.
        const auto r = reweight({0.5, 0.75}, {0.3, 0.3}, 1.0, 1.0, 1e-4);
        CHECK(r[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(r[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("empty input, empty output") {
        CHECK(reweight({}, {}, 0.75, 1.0, 1e-4).empty());
    }
    SUBCASE("normalization absorbs a uniform raw-weight rescale") {
        // f doubles from (0.5, 0.75) to (0.75, 0.875); the normalized
        // factors must be identical.
        const auto a = reweight({0.5, 0.75}, {0, 0}, 1.0, 1.0, 1e-4);
        const auto b = reweight({0.75, 0.875}, {0, 0}, 1.0, 1.0, 1e-4);
        CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-12));
        CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-12));
    }
}

TEST_CASE("reweight mean is 1 and raw weight grows with loc_a") {
    SplitMix64 rng(14);
    for (int rep = 0; rep < 300; ++rep) {
        const int n = static_cast<int>(rng.uniform_int(1, 60));
        std::vector<double> loc(static_cast<std::size_t>(n)), cls(static_cast<std::size_t>(n));
        for (auto& v : loc) v = rng.next_double();
        for (auto& v : cls) v = rng.next_double();
        const double alpha = rng.next_double();
        const double gamma = rng.uniform(0.0, 2.0);
        const auto r = reweight(loc, cls, alpha, gamma, 1e-4);
        const double mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
        CHECK(std::fabs(mean - 1.0) <= 1e-9);
        for (double v : r) CHECK(v > 0.0);
    }
    // Monotonicity in loc_a with the partner entry fixed.
    const auto r = reweight({0.2, 0.6}, {0.5, 0.5}, 0.75, 1.0, 1e-4);
    CHECK(r[1] > r[0]);
}

TEST_CASE("reweight clamps near-singular inputs") {
    const auto r = reweight({1.0, 0.5}, {1.0, 0.5}, 0.75, 1.0, 1e-4);
    CHECK(std::isfinite(r[0]));
    CHECK(r[0] > r[1]);
}

namespace {

struct CleanFixture {
    AnchorSet anchors;
    std::vector<Box> gts;
    MatrixD probs;
    std::vector<BoxDelta> deltas;
    AssignParams params;

    CleanFixture() {
        AnchorConfig ac;
        ac.levels = {{16.0, 16.0}};
        ac.aspect_ratios = {1.0, 2.0};
        // Octave 2 puts ~32px anchors on the grid so the hard fg
        // threshold is reachable for the fixture objects.
        ac.scale_octaves = {1.0, 2.0};
        ac.image_width = 64;
        ac.image_height = 64;
        anchors = generate(ac);
        gts = {Box{8, 8, 40, 40}, Box{30, 30, 60, 62}};
        params.top_n = 4;

        SplitMix64 rng(15);
        probs = MatrixD(anchors.size(), 1);
        deltas.resize(anchors.size());
        for (std::size_t i = 0; i < anchors.size(); ++i) {
            probs(i, 0) = rng.uniform(0.05, 0.95);
            deltas[i] = BoxDelta{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                                 rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
        }
    }
};

}  // namespace

TEST_CASE("assign_clean invariants") {
    CleanFixture fx;
    const Assignment a = assign_clean(fx.anchors, fx.gts, std::vector<int>(fx.gts.size(), 0),
                                      fx.probs, fx.deltas, fx.params);

    REQUIRE(a.size() == fx.anchors.size());
    CHECK(a.positive_count() > 0);
    CHECK(a.positive_count() <= static_cast<std::size_t>(fx.params.top_n) * fx.gts.size());

    double pos_weight_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.soft_label[i] >= 0.0);
        CHECK(a.soft_label[i] <= 1.0);
        if (a.role[i] == AnchorRole::kNegative) {
            CHECK(a.soft_label[i] == 0.0);
            CHECK(a.weight[i] == 1.0);
            CHECK(a.matched_gt[i] == -1);
        } else {
            REQUIRE(a.role[i] == AnchorRole::kPositive);  // no ignore band here
            const Box refined = decode(fx.anchors.boxes[i], fx.deltas[i]);
            CHECK(a.loc_accuracy[i] ==
                  iou(refined, fx.gts[static_cast<std::size_t>(a.matched_gt[i])]));
            CHECK(a.cls_confidence[i] == fx.probs(i, 0));
            CHECK(a.soft_label[i] ==
                  cleanliness(a.loc_accuracy[i], a.cls_confidence[i], fx.params.alpha));
            pos_weight_sum += a.weight[i];
            ++n_pos;
        }
    }
    CHECK(std::fabs(pos_weight_sum / static_cast<double>(n_pos) - 1.0) <= 1e-9);
}

TEST_CASE("assign_clean with zero ground truths marks everything negative") {
    CleanFixture fx;
    const Assignment a = assign_clean(fx.anchors, {}, std::vector<int>{}, fx.probs, fx.deltas,
                                      fx.params);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.role[i] == AnchorRole::kNegative);
        CHECK(a.soft_label[i] == 0.0);
        CHECK(a.weight[i] == 1.0);
    }
}

TEST_CASE("assign_clean single positive hand value") {
    // alpha=0.5, loc_a=0.5, cls_c=0.5, gamma=1, one positive: c=0.5, r=1.
    const AnchorSet anchors = make_set({Box{0, 0, 10, 10}});
    const std::vector<Box> gts = {Box{0, 0, 10, 5}};  // anchor IoU 0.5 with zero delta
    AssignParams p;
    p.alpha = 0.5;
    p.gamma = 1.0;
    p.top_n = 1;
    const Assignment a = assign_clean(anchors, gts, std::vector<double>{0.5},
                                      std::vector<BoxDelta>{BoxDelta{}}, p);
    REQUIRE(a.role[0] == AnchorRole::kPositive);
    CHECK(a.soft_label[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(a.weight[0] == 1.0);
}

TEST_CASE("cold start: zero deltas reduce loc_a to the anchor IoU bitwise") {
    CleanFixture fx;
    const std::vector<BoxDelta> zero(fx.anchors.size());
    const Assignment a = assign_clean(fx.anchors, fx.gts, std::vector<int>(fx.gts.size(), 0),
                                      fx.probs, zero, fx.params);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.role[i] != AnchorRole::kPositive) continue;
        CHECK(a.loc_accuracy[i] ==
              iou(fx.anchors.boxes[i], fx.gts[static_cast<std::size_t>(a.matched_gt[i])]));
    }
}

TEST_CASE("misaligned predictions are rejected") {
    CleanFixture fx;
    MatrixD short_probs(fx.anchors.size() - 1, 1);
    CHECK_THROWS_AS(assign_clean(fx.anchors, fx.gts, std::vector<int>(fx.gts.size(), 0),
                                 short_probs, fx.deltas, fx.params),
                    std::invalid_argument);
    std::vector<BoxDelta> short_deltas(fx.anchors.size() - 1);
    CHECK_THROWS_AS(assign_clean(fx.anchors, fx.gts, std::vector<int>(fx.gts.size(), 0), fx.probs,
                                 short_deltas, fx.params),
                    std::invalid_argument);
}

TEST_CASE("assign_supervision method matrix") {
    CleanFixture fx;
    const std::vector<int> classes(fx.gts.size(), 0);

    SUBCASE("soft labels off reproduces the hard three-way split") {
        const Assignment a = assign_supervision(fx.anchors, fx.gts, classes, fx.probs, fx.deltas,
                                                fx.params, MethodFlags{false, false});
        const HardAssignment h = assign_hard(fx.anchors, fx.gts, fx.params);
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (h.label[i] == 1) {
                CHECK(a.role[i] == AnchorRole::kPositive);
                CHECK(a.soft_label[i] == 1.0);
                CHECK(a.weight[i] == 1.0);
                CHECK(a.matched_gt[i] == h.matched_gt[i]);
            } else if (h.label[i] == -1) {
                CHECK(a.role[i] == AnchorRole::kIgnored);
            } else {
                CHECK(a.role[i] == AnchorRole::kNegative);
            }
        }
    }
    SUBCASE("reweighting only keeps hard labels but varies weights") {
        const Assignment a = assign_supervision(fx.anchors, fx.gts, classes, fx.probs, fx.deltas,
                                                fx.params, MethodFlags{false, true});
        double sum = 0.0;
        std::size_t n = 0;
        bool varied = false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a.role[i] != AnchorRole::kPositive) continue;
            CHECK(a.soft_label[i] == 1.0);
            sum += a.weight[i];
            ++n;
            if (a.weight[i] != 1.0) varied = true;
        }
        REQUIRE(n > 0);
        CHECK(std::fabs(sum / static_cast<double>(n) - 1.0) <= 1e-9);
        if (n > 1) CHECK(varied);
    }
    SUBCASE("soft labels only forces unit weights") {
        const Assignment a = assign_supervision(fx.anchors, fx.gts, classes, fx.probs, fx.deltas,
                                                fx.params, MethodFlags{true, false});
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a.weight[i] == 1.0);
            if (a.role[i] == AnchorRole::kPositive) {
                CHECK(a.soft_label[i] < 1.0);  // soft targets
            }
        }
    }
    SUBCASE("both on equals assign_clean") {
        const Assignment a = assign_supervision(fx.anchors, fx.gts, classes, fx.probs, fx.deltas,
                                                fx.params, MethodFlags{true, true});
        const Assignment b = assign_clean(fx.anchors, fx.gts, classes, fx.probs, fx.deltas,
                                          fx.params);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a.role[i] == b.role[i]);
            CHECK(a.soft_label[i] == b.soft_label[i]);
            CHECK(a.weight[i] == b.weight[i]);
        }
    }
}

TEST_CASE("parameter validation") {
    AssignParams p;
    p.bg_threshold = 0.7;  // above fg
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = AssignParams{};
    p.alpha = 1.5;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = AssignParams{};
    p.eps_clamp = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = AssignParams{};
    p.top_n = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
