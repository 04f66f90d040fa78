// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "noisy_anchor/assignment.hpp"
#include "noisy_anchor/evalkit.hpp"
#include "noisy_anchor/geometry.hpp"
#include "noisy_anchor/losses.hpp"
#include "noisy_anchor/matrix.hpp"

namespace na::verify {

/// Reference implementations used to cross-check the production paths.
/// Each is written directly from the definition, shares no code with the
/// implementation it checks, and trades speed for obviousness.

/// Quadratic-scan suppressor: walk candidates in rank order and compare
/// against every previously surviving detection.
std::vector<Detection> nms_reference(const std::vector<Detection>& dets, double iou_thresh);

/// Direct transcription of the greedy matching rule plus the 101-point
/// interpolation evaluated by definition (a full scan of the PR points
/// per recall sample).
double average_precision_reference(const std::vector<std::vector<Detection>>& dets_per_scene,
                                   const std::vector<std::vector<GtObject>>& gts_per_scene,
                                   double iou_thresh);

/// Two-pass textbook Pearson correlation.
std::optional<double> pearson_reference(const std::vector<double>& x,
                                        const std::vector<double>& y);

/// Central finite differences of a scalar function, one coordinate at a
/// time. `values` is mutated during probing and restored afterwards.
std::vector<double> finite_difference(const std::function<double()>& f,
                                      std::vector<double*> values, double step);

/// The classification objective with every non-logit quantity frozen at
/// the base point: per-cell targets, re-weights and focal factors plus
/// the positive-count normalizer become fixed inputs, exactly the
/// function whose gradient the analytic path claims to return. value()
/// is an independent transcription of the weighted BCE formula.
struct FrozenClsObjective {
    MatrixD target;       // t per (anchor, class) cell
    MatrixD weight;       // r per cell
    MatrixD w_pos, w_neg; // focal factors per cell
    std::vector<char> active;  // per anchor; ignored anchors excluded
    double normalizer = 1.0;

    double value(const MatrixD& logits) const;
};

FrozenClsObjective freeze_classification(const MatrixD& probs, const Assignment& assignment,
                                         const FocalParams& fp);

/// Same idea for the regression loss: weights and targets fixed.
struct FrozenRegObjective {
    std::vector<double> weight;  // r per anchor; 0 for non-positives
    std::vector<BoxDelta> target;
    double beta = 1.0;
    double normalizer = 1.0;

    double value(const std::vector<BoxDelta>& pred) const;
};

FrozenRegObjective freeze_regression(const Assignment& assignment,
                                     const std::vector<BoxDelta>& targets, double beta);

/// Normalized gradient-check error: max_i |analytic_i - numeric_i|
/// divided by the larger infinity norm of the two gradients (floored).
/// Normalizing by the gradient's scale keeps finite-difference roundoff
/// on near-zero entries from drowning the comparison while still
/// flagging any entry that is wrong at the scale the gradient acts at.
double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                          double floor = 1e-8);

}  // namespace na::verify

namespace na {
class SplitMix64;
}

namespace na::verify {

/// Random instance generators shared by the self-check command and the
/// test suites.
Box random_box(SplitMix64& rng, double image_w, double image_h, double min_size, double max_size);

std::vector<Detection> random_detections(SplitMix64& rng, int count, int num_classes,
                                         double image_w, double image_h);

std::vector<GtObject> random_gts(SplitMix64& rng, int count, int num_classes, double image_w,
                                 double image_h);

}  // namespace na::verify
