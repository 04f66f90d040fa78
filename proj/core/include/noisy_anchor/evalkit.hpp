// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "noisy_anchor/geometry.hpp"
#include "noisy_anchor/synthdata.hpp"

namespace na {

struct Detection {
    Box box;
    int class_id = 0;
    double confidence = 0.0;
};

inline constexpr int kRecallSamples = 101;  // COCO 101-point interpolation grid
inline constexpr int kDefaultMaxDetections = 100;

/// Greedy class-wise non-maximum suppression. Detections are visited in
/// descending confidence (ties: lower input index first); a detection is
/// suppressed when its IoU with an already kept detection of the same
/// class exceeds iou_thresh. Output is in descending confidence order.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thresh);

/// Precision at the 101 evenly spaced recall points for one IoU
/// threshold, plus the resulting average precision.
struct PrCurve {
    double iou_thresh = 0.0;
    std::array<double, kRecallSamples> precision{};
    double ap = 0.0;
};

/// COCO-style average precision at one IoU threshold, averaged over the
/// classes that have ground truth (classes absent from both ground truth
/// and detections are skipped). Detections are matched greedily in
/// descending confidence (ties: lower scene index, then lower original
/// index) to the highest-IoU unmatched same-class ground truth at or
/// above the threshold.
double average_precision(const std::vector<std::vector<Detection>>& dets_per_scene,
                         const std::vector<std::vector<GtObject>>& gts_per_scene,
                         double iou_thresh);

/// As above but also producing the interpolated PR samples.
PrCurve pr_curve(const std::vector<std::vector<Detection>>& dets_per_scene,
                 const std::vector<std::vector<GtObject>>& gts_per_scene, double iou_thresh);

/// Mean confidence, mean matched IoU and their Pearson correlation over
/// the most confident fraction of predictions. Matched IoU is the best
/// IoU against same-class ground truth in the prediction's scene (0 when
/// none exists). Undefined statistics (empty selection, zero variance)
/// stay unset instead of collapsing to 0.
struct ConfIouStats {
    std::size_t count = 0;
    std::optional<double> mean_confidence;
    std::optional<double> mean_iou;
    std::optional<double> pearson;
};

ConfIouStats confidence_iou_stats(const std::vector<std::vector<Detection>>& dets_per_scene,
                                  const std::vector<std::vector<GtObject>>& gts_per_scene,
                                  double top_fraction);

/// Full evaluation report: AP at IoU 0.50:0.05:0.95, PR samples per
/// threshold, and the confidence/IoU diagnostics before and after NMS.
struct EvalReport {
    std::vector<PrCurve> curves;
    double mean_ap = 0.0;
    double ap50 = 0.0;
    double ap75 = 0.0;
    ConfIouStats before_nms;
    ConfIouStats after_nms;
};

/// Thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> coco_iou_thresholds();

struct EvalOptions {
    double nms_iou = 0.5;
    double top_fraction = 0.02;
    int max_detections = kDefaultMaxDetections;  // per scene, after NMS
};

/// Evaluate raw (pre-NMS) detections: diagnostics on the raw set, then
/// class-wise NMS and the per-scene detection cap, then AP.
EvalReport evaluate(const std::vector<std::vector<Detection>>& raw_dets_per_scene,
                    const std::vector<std::vector<GtObject>>& gts_per_scene,
                    const EvalOptions& options = {});

/// JSON-shaped rendering of a report (schema_version field included).
std::string eval_report_json(const EvalReport& report);

/// Flat CSV, one row per IoU threshold:
/// iou_threshold,ap
std::string eval_report_csv(const EvalReport& report);

/// PR samples CSV, one row per (threshold, recall sample):
/// iou_threshold,recall,precision
std::string pr_curves_csv(const EvalReport& report);

}  // namespace na
