// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <map>
#include <vector>

#include "noisy_anchor/anchors.hpp"
#include "noisy_anchor/geometry.hpp"
#include "noisy_anchor/matrix.hpp"

namespace na {

/// Parameters of the label assignment stage. alpha balances localization
/// accuracy against classification confidence in the cleanliness score,
/// gamma sharpens the re-weighting factors, top_n is the number of
/// positive candidates collected per ground-truth object. fg/bg
/// thresholds drive only the hard-label baseline.
struct AssignParams {
    double alpha = 0.75;
    double gamma = 1.0;
    int top_n = 30;
    double fg_threshold = 0.5;
    double bg_threshold = 0.4;
    /// Inputs to the 1/(1-x) transform are clamped to [0, 1 - eps_clamp].
    double eps_clamp = 1e-4;
    /// When > 0, candidates whose anchor IoU falls below this floor are
    /// dropped from the positive set. 0 keeps every top-N candidate.
    double min_pos_iou = 0.0;

    void validate() const;
};

/// Hard threshold labels: 1 foreground, 0 background, -1 ignored.
/// matched_gt holds the argmax-IoU ground truth for foreground anchors
/// and -1 elsewhere.
struct HardAssignment {
    std::vector<int> label;
    std::vector<int> matched_gt;
};

enum class AnchorRole : unsigned char { kNegative = 0, kPositive = 1, kIgnored = 2 };

/// Per-anchor supervision record: role, matched ground truth, soft label
/// c, re-weight factor r, and the diagnostic loc_a / cls_c the score was
/// built from. Negatives always carry c = 0 and r = 1; the cleanliness
/// path never emits the ignored role (only the hard baseline does).
struct Assignment {
    std::vector<AnchorRole> role;
    std::vector<int> matched_gt;     // -1 unless positive
    std::vector<int> matched_class;  // -1 unless positive
    std::vector<double> soft_label;  // c
    std::vector<double> weight;      // r
    std::vector<double> loc_accuracy;
    std::vector<double> cls_confidence;

    std::size_t size() const { return role.size(); }
    std::size_t positive_count() const;
};

/// Hard IoU-threshold labels from the max-IoU ground truth per anchor:
/// foreground at IoU >= fg_threshold, background below bg_threshold,
/// ignored in between. With no ground truths every anchor is background.
HardAssignment assign_hard(const AnchorSet& anchors, const std::vector<Box>& gts,
                           const AssignParams& params);

/// Collect the positive candidate set: for each ground truth, the top_n
/// anchors by anchor-box IoU (descending; ties broken by lower anchor
/// index). An anchor claimed by several ground truths goes to the one it
/// overlaps most, ties to the lower ground-truth index. Returns anchor
/// index -> ground-truth index; anchors not in the map are negatives.
std::map<int, int> select_positives(const AnchorSet& anchors, const std::vector<Box>& gts,
                                    int top_n, double min_pos_iou = 0.0);

/// Cleanliness score: convex combination alpha * loc_a + (1-alpha) * cls_c.
double cleanliness(double loc_a, double cls_c, double alpha);

/// Re-weighting factors for one image's positives. Inputs are clamped to
/// [0, 1-eps_clamp], passed through f(x) = 1/(1-x), combined with alpha
/// and raised to gamma, then normalized so the factors average exactly 1
/// over the image. gamma = 0 therefore yields all-ones.
std::vector<double> reweight(const std::vector<double>& loc_a, const std::vector<double>& cls_c,
                             double alpha, double gamma, double eps_clamp);

/// Full cleanliness assignment for one image. Positives come from
/// select_positives on anchor-box IoU (before refinement); for each
/// positive, loc_a is the IoU between its decoded (regressed) box and the
/// matched ground truth, cls_c the predicted probability of the matched
/// ground truth's class. probs is anchors x classes; deltas is the
/// regression output per anchor. c and r are constants of the current
/// iteration: no gradient flows through them. Throws on size mismatches.
Assignment assign_clean(const AnchorSet& anchors, const std::vector<Box>& gts,
                        const std::vector<int>& gt_classes, const MatrixD& probs,
                        const std::vector<BoxDelta>& deltas, const AssignParams& params);

/// Single-class convenience overload matching the scalar-probability
/// signature: every ground truth is class 0 and probs has one column.
Assignment assign_clean(const AnchorSet& anchors, const std::vector<Box>& gts,
                        const std::vector<double>& probs, const std::vector<BoxDelta>& deltas,
                        const AssignParams& params);

/// Method matrix of the experiments: soft labels and sample re-weighting
/// can be toggled independently.
struct MethodFlags {
    bool soft_labels = true;
    bool reweighting = true;
};

/// Supervision for any method combination.
///  - soft labels on: positives from select_positives with cleanliness
///    soft labels; there is no ignore band.
///  - soft labels off: hard thresholds of assign_hard with binary
///    targets; anchors in the ignore band take the ignored role and are
///    excluded from both losses.
///  - reweighting off forces r = 1 everywhere; on, r comes from the
///    cleanliness transform over the current positive set.
Assignment assign_supervision(const AnchorSet& anchors, const std::vector<Box>& gts,
                              const std::vector<int>& gt_classes, const MatrixD& probs,
                              const std::vector<BoxDelta>& deltas, const AssignParams& params,
                              MethodFlags flags);

}  // namespace na
