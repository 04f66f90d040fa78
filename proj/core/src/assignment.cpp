// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include "noisy_anchor/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace na {

void AssignParams::validate() const {
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("assign.alpha must be in [0, 1]");
    if (gamma < 0.0) throw std::invalid_argument("assign.gamma must be >= 0");
    if (top_n < 1) throw std::invalid_argument("assign.top_n must be >= 1");
    if (fg_threshold < 0.0 || fg_threshold > 1.0 || bg_threshold < 0.0 || bg_threshold > 1.0) {
        throw std::invalid_argument("assignment thresholds must be in [0, 1]");
    }
    if (bg_threshold > fg_threshold) {
        throw std::invalid_argument("assign.bg_threshold must not exceed assign.fg_threshold");
    }
    if (!(eps_clamp > 0.0) || eps_clamp >= 1.0) {
        throw std::invalid_argument("assign.eps_clamp must be in (0, 1)");
    }
    if (min_pos_iou < 0.0 || min_pos_iou > 1.0) {
        throw std::invalid_argument("assign.min_pos_iou must be in [0, 1]");
    }
}

std::size_t Assignment::positive_count() const {
    std::size_t n = 0;
    for (AnchorRole r : role) {
        if (r == AnchorRole::kPositive) ++n;
    }
    return n;
}

HardAssignment assign_hard(const AnchorSet& anchors, const std::vector<Box>& gts,
                           const AssignParams& params) {
    params.validate();
    const std::size_t n = anchors.size();
    HardAssignment out;
    out.label.assign(n, 0);
    out.matched_gt.assign(n, -1);
    if (gts.empty()) return out;

    const MatrixD m = iou_matrix(anchors.boxes, gts);
    for (std::size_t i = 0; i < n; ++i) {
        double best = -1.0;
        int best_gt = -1;
        for (std::size_t j = 0; j < gts.size(); ++j) {
            if (m(i, j) > best) {  // strict: ties keep the lower gt index
                best = m(i, j);
                best_gt = static_cast<int>(j);
            }
        }
        if (best >= params.fg_threshold) {
            out.label[i] = 1;
            out.matched_gt[i] = best_gt;
        } else if (best < params.bg_threshold) {
            out.label[i] = 0;
        } else {
            out.label[i] = -1;
        }
    }
    return out;
}

std::map<int, int> select_positives(const AnchorSet& anchors, const std::vector<Box>& gts,
                                    int top_n, double min_pos_iou) {
    if (top_n < 1) throw std::invalid_argument("top_n must be >= 1");
    std::map<int, int> out;
    if (gts.empty() || anchors.size() == 0) return out;

    const MatrixD m = iou_matrix(anchors.boxes, gts);
    const std::size_t n = anchors.size();
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(top_n), n);

    std::vector<int> order(n);
    // best IoU of the ground truth an anchor is currently assigned to
    std::vector<double> claimed_iou(n, -1.0);

    for (std::size_t j = 0; j < gts.size(); ++j) {
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                          order.end(), [&](int a, int b) {
                              const double ia = m(static_cast<std::size_t>(a), j);
                              const double ib = m(static_cast<std::size_t>(b), j);
                              if (ia != ib) return ia > ib;
                              return a < b;
                          });
        for (std::size_t k = 0; k < take; ++k) {
            const int i = order[k];
            const double v = m(static_cast<std::size_t>(i), j);
            if (min_pos_iou > 0.0 && v < min_pos_iou) continue;
            // Cross-GT conflict: keep the higher-IoU claim; on an exact
            // tie the earlier (lower-index) ground truth wins.
            if (v > claimed_iou[i]) {
                claimed_iou[i] = v;
                out[i] = static_cast<int>(j);
            }
        }
    }
    return out;
}

double cleanliness(double loc_a, double cls_c, double alpha) {
    return alpha * loc_a + (1.0 - alpha) * cls_c;
}

std::vector<double> reweight(const std::vector<double>& loc_a, const std::vector<double>& cls_c,
                             double alpha, double gamma, double eps_clamp) {
    if (loc_a.size() != cls_c.size()) {
        throw std::invalid_argument("reweight: loc_a and cls_c must align");
    }
    const std::size_t n = loc_a.size();
    std::vector<double> r(n);
    if (n == 0) return r;

    const double hi = 1.0 - eps_clamp;
    const auto f = [&](double x) { return 1.0 / (1.0 - std::clamp(x, 0.0, hi)); };

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = std::pow(alpha * f(loc_a[i]) + (1.0 - alpha) * f(cls_c[i]), gamma);
        sum += r[i];
    }
    // Normalize to mean 1 over the image's positives.
    const double scale = static_cast<double>(n) / sum;
    for (double& v : r) v *= scale;
    return r;
}

namespace {

Assignment make_all_negative(std::size_t n) {
    Assignment a;
    a.role.assign(n, AnchorRole::kNegative);
    a.matched_gt.assign(n, -1);
    a.matched_class.assign(n, -1);
    a.soft_label.assign(n, 0.0);
    a.weight.assign(n, 1.0);
    a.loc_accuracy.assign(n, 0.0);
    a.cls_confidence.assign(n, 0.0);
    return a;
}

void check_prediction_shapes(const AnchorSet& anchors, const std::vector<Box>& gts,
                             const std::vector<int>& gt_classes, const MatrixD& probs,
                             const std::vector<BoxDelta>& deltas) {
    if (gt_classes.size() != gts.size()) {
        throw std::invalid_argument("gt_classes must align with gts");
    }
    if (probs.rows != anchors.size()) {
        throw std::invalid_argument("probs rows must equal the anchor count");
    }
    if (deltas.size() != anchors.size()) {
        throw std::invalid_argument("deltas must align with the anchor set");
    }
}

/// Fill loc_a / cls_c for the positives listed in `matches`, then write
/// soft labels and weights per the method flags.
void fill_positive_fields(Assignment& a, const std::map<int, int>& matches,
                          const AnchorSet& anchors, const std::vector<Box>& gts,
                          const std::vector<int>& gt_classes, const MatrixD& probs,
                          const std::vector<BoxDelta>& deltas, const AssignParams& params,
                          bool soft_labels, bool reweighting) {
    std::vector<int> pos_idx;
    std::vector<double> loc, cls;
    pos_idx.reserve(matches.size());
    loc.reserve(matches.size());
    cls.reserve(matches.size());

    for (const auto& [i, j] : matches) {
        const std::size_t ai = static_cast<std::size_t>(i);
        const int cls_id = gt_classes[static_cast<std::size_t>(j)];
        if (cls_id < 0 || static_cast<std::size_t>(cls_id) >= probs.cols) {
            throw std::invalid_argument("ground-truth class outside the probability matrix");
        }
        const Box refined = decode(anchors.boxes[ai], deltas[ai]);
        const double loc_a = iou(refined, gts[static_cast<std::size_t>(j)]);
        const double cls_c = probs(ai, static_cast<std::size_t>(cls_id));

        a.role[ai] = AnchorRole::kPositive;
        a.matched_gt[ai] = j;
        a.matched_class[ai] = cls_id;
        a.loc_accuracy[ai] = loc_a;
        a.cls_confidence[ai] = cls_c;
        a.soft_label[ai] = soft_labels ? cleanliness(loc_a, cls_c, params.alpha) : 1.0;

        pos_idx.push_back(i);
        loc.push_back(loc_a);
        cls.push_back(cls_c);
    }

    if (reweighting) {
        const std::vector<double> r =
            reweight(loc, cls, params.alpha, params.gamma, params.eps_clamp);
        for (std::size_t k = 0; k < pos_idx.size(); ++k) {
            a.weight[static_cast<std::size_t>(pos_idx[k])] = r[k];
        }
    }
}

}  // namespace

Assignment assign_clean(const AnchorSet& anchors, const std::vector<Box>& gts,
                        const std::vector<int>& gt_classes, const MatrixD& probs,
                        const std::vector<BoxDelta>& deltas, const AssignParams& params) {
    params.validate();
    check_prediction_shapes(anchors, gts, gt_classes, probs, deltas);

    Assignment a = make_all_negative(anchors.size());
    if (gts.empty()) return a;

    const std::map<int, int> matches =
        select_positives(anchors, gts, params.top_n, params.min_pos_iou);
    fill_positive_fields(a, matches, anchors, gts, gt_classes, probs, deltas, params,
                         /*soft_labels=*/true, /*reweighting=*/true);
    return a;
}

Assignment assign_clean(const AnchorSet& anchors, const std::vector<Box>& gts,
                        const std::vector<double>& probs, const std::vector<BoxDelta>& deltas,
                        const AssignParams& params) {
    MatrixD m(probs.size(), 1);
    m.data = probs;
    return assign_clean(anchors, gts, std::vector<int>(gts.size(), 0), m, deltas, params);
}

Assignment assign_supervision(const AnchorSet& anchors, const std::vector<Box>& gts,
                              const std::vector<int>& gt_classes, const MatrixD& probs,
                              const std::vector<BoxDelta>& deltas, const AssignParams& params,
                              MethodFlags flags) {
    params.validate();
    check_prediction_shapes(anchors, gts, gt_classes, probs, deltas);

    Assignment a = make_all_negative(anchors.size());

    if (flags.soft_labels) {
        if (gts.empty()) return a;
        const std::map<int, int> matches =
            select_positives(anchors, gts, params.top_n, params.min_pos_iou);
        fill_positive_fields(a, matches, anchors, gts, gt_classes, probs, deltas, params,
                             /*soft_labels=*/true, flags.reweighting);
        return a;
    }

    // Hard-label path: threshold labels, binary targets, ignore band
    // excluded from both losses.
    const HardAssignment hard = assign_hard(anchors, gts, params);
    std::map<int, int> matches;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        if (hard.label[i] == 1) {
            matches.emplace(static_cast<int>(i), hard.matched_gt[i]);
        } else if (hard.label[i] == -1) {
            a.role[i] = AnchorRole::kIgnored;
        }
    }
    fill_positive_fields(a, matches, anchors, gts, gt_classes, probs, deltas, params,
                         /*soft_labels=*/false, flags.reweighting);
    return a;
}

}  // namespace na
