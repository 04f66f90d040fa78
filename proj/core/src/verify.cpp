// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include "noisy_anchor/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "noisy_anchor/prng.hpp"

namespace na::verify {

std::vector<Detection> nms_reference(const std::vector<Detection>& dets, double iou_thresh) {
    // Rank: confidence descending, original index ascending.
    std::vector<std::size_t> rank(dets.size());
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].confidence > dets[b].confidence;
    });

    std::vector<Detection> survivors;
    for (std::size_t idx : rank) {
        bool overlaps_survivor = false;
        for (const Detection& s : survivors) {
            if (s.class_id == dets[idx].class_id && iou(s.box, dets[idx].box) > iou_thresh) {
                overlaps_survivor = true;
                break;
            }
        }
        if (!overlaps_survivor) survivors.push_back(dets[idx]);
    }
    return survivors;
}

namespace {

struct FlatDet {
    std::size_t scene;
    std::size_t index;
    Detection det;
};

}  // namespace

double average_precision_reference(const std::vector<std::vector<Detection>>& dets_per_scene,
                                   const std::vector<std::vector<GtObject>>& gts_per_scene,
                                   double iou_thresh) {
    // Classes that count: any with ground truth, plus any with detections.
    std::vector<int> classes;
    auto note = [&classes](int c) {
        if (std::find(classes.begin(), classes.end(), c) == classes.end()) classes.push_back(c);
    };
    for (const auto& scene : gts_per_scene) {
        for (const auto& g : scene) note(g.class_id);
    }
    for (const auto& scene : dets_per_scene) {
        for (const auto& d : scene) note(d.class_id);
    }
    std::sort(classes.begin(), classes.end());

    double ap_sum = 0.0;
    std::size_t ap_classes = 0;

    for (int cls : classes) {
        std::size_t npig = 0;
        for (const auto& scene : gts_per_scene) {
            for (const auto& g : scene) {
                if (g.class_id == cls) ++npig;
            }
        }

        std::vector<FlatDet> flat;
        for (std::size_t s = 0; s < dets_per_scene.size(); ++s) {
            for (std::size_t i = 0; i < dets_per_scene[s].size(); ++i) {
                if (dets_per_scene[s][i].class_id == cls) flat.push_back({s, i, dets_per_scene[s][i]});
            }
        }
        if (npig == 0 && flat.empty()) continue;  // class never appears
        ++ap_classes;
        if (npig == 0) continue;  // detections of an absent class: AP 0

        std::sort(flat.begin(), flat.end(), [](const FlatDet& a, const FlatDet& b) {
            if (a.det.confidence != b.det.confidence) return a.det.confidence > b.det.confidence;
            if (a.scene != b.scene) return a.scene < b.scene;
            return a.index < b.index;
        });

        std::vector<std::vector<bool>> used(gts_per_scene.size());
        for (std::size_t s = 0; s < gts_per_scene.size(); ++s) {
            used[s].assign(gts_per_scene[s].size(), false);
        }

        std::vector<double> recall, precision;
        std::size_t tp = 0;
        for (std::size_t k = 0; k < flat.size(); ++k) {
            const auto& fd = flat[k];
            double best_iou = -1.0;
            std::ptrdiff_t best = -1;
            const auto& scene_gts = gts_per_scene[fd.scene];
            for (std::size_t j = 0; j < scene_gts.size(); ++j) {
                if (scene_gts[j].class_id != cls || used[fd.scene][j]) continue;
                const double v = iou(fd.det.box, scene_gts[j].box);
                if (v >= iou_thresh && v > best_iou) {
                    best_iou = v;
                    best = static_cast<std::ptrdiff_t>(j);
                }
            }
            if (best >= 0) {
                used[fd.scene][static_cast<std::size_t>(best)] = true;
                ++tp;
            }
            recall.push_back(static_cast<double>(tp) / static_cast<double>(npig));
            precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
        }

        // 101-point interpolation by definition.
        double ap = 0.0;
        for (int g = 0; g <= 100; ++g) {
            const double r = static_cast<double>(g) / 100.0;
            double best_p = 0.0;
            for (std::size_t k = 0; k < recall.size(); ++k) {
                if (recall[k] >= r) best_p = std::max(best_p, precision[k]);
            }
            ap += best_p;
        }
        ap_sum += ap / 101.0;
    }

    if (ap_classes == 0) return 1.0;
    return ap_sum / static_cast<double>(ap_classes);
}

std::optional<double> pearson_reference(const std::vector<double>& x,
                                        const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) return std::nullopt;
    const double n = static_cast<double>(x.size());

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;

    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

double FrozenClsObjective::value(const MatrixD& logits) const {
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        if (!active[i]) continue;
        for (std::size_t k = 0; k < logits.cols; ++k) {
            const double p = 1.0 / (1.0 + std::exp(-logits(i, k)));
            const double q = std::min(std::max(p, 1e-7), 1.0 - 1e-7);
            const double t = target(i, k);
            total += weight(i, k) *
                     (-t * w_pos(i, k) * std::log(q) - (1.0 - t) * w_neg(i, k) * std::log(1.0 - q));
        }
    }
    return total * normalizer;
}

FrozenClsObjective freeze_classification(const MatrixD& probs, const Assignment& assignment,
                                         const FocalParams& fp) {
    FrozenClsObjective obj;
    const std::size_t n = probs.rows;
    const std::size_t c = probs.cols;
    obj.target = MatrixD(n, c);
    obj.weight = MatrixD(n, c, 1.0);
    obj.w_pos = MatrixD(n, c);
    obj.w_neg = MatrixD(n, c);
    obj.active.assign(n, 1);
    obj.normalizer =
        1.0 / static_cast<double>(std::max<std::size_t>(assignment.positive_count(), 1));

    for (std::size_t i = 0; i < n; ++i) {
        if (assignment.role[i] == AnchorRole::kIgnored) {
            obj.active[i] = 0;
            continue;
        }
        for (std::size_t k = 0; k < c; ++k) {
            const double p = std::min(std::max(probs(i, k), 1e-7), 1.0 - 1e-7);
            obj.w_pos(i, k) = fp.alpha * std::pow(1.0 - p, fp.gamma);
            obj.w_neg(i, k) = (1.0 - fp.alpha) * std::pow(p, fp.gamma);
        }
        if (assignment.role[i] == AnchorRole::kPositive) {
            const auto k = static_cast<std::size_t>(assignment.matched_class[i]);
            obj.target(i, k) = assignment.soft_label[i];
            obj.weight(i, k) = assignment.weight[i];
        }
    }
    return obj;
}

double FrozenRegObjective::value(const std::vector<BoxDelta>& pred) const {
    auto huber = [this](double x) {
        const double ax = std::fabs(x);
        return ax < beta ? 0.5 * x * x / beta : ax - 0.5 * beta;
    };
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (weight[i] == 0.0) continue;
        total += weight[i] * (huber(pred[i].dx - target[i].dx) + huber(pred[i].dy - target[i].dy) +
                              huber(pred[i].dw - target[i].dw) + huber(pred[i].dh - target[i].dh));
    }
    return total * normalizer;
}

FrozenRegObjective freeze_regression(const Assignment& assignment,
                                     const std::vector<BoxDelta>& targets, double beta) {
    FrozenRegObjective obj;
    obj.beta = beta;
    obj.target = targets;
    obj.weight.assign(assignment.size(), 0.0);
    obj.normalizer =
        1.0 / static_cast<double>(std::max<std::size_t>(assignment.positive_count(), 1));
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment.role[i] == AnchorRole::kPositive) obj.weight[i] = assignment.weight[i];
    }
    return obj;
}

std::vector<double> finite_difference(const std::function<double()>& f,
                                      std::vector<double*> values, double step) {
    std::vector<double> grad(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = *values[i];
        *values[i] = saved + step;
        const double up = f();
        *values[i] = saved - step;
        const double down = f();
        *values[i] = saved;
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                          double floor) {
    double scale = floor;
    double worst_abs = 0.0;
    for (std::size_t i = 0; i < analytic.size() && i < numeric.size(); ++i) {
        scale = std::max({scale, std::fabs(analytic[i]), std::fabs(numeric[i])});
        worst_abs = std::max(worst_abs, std::fabs(analytic[i] - numeric[i]));
    }
    return worst_abs / scale;
}

Box random_box(SplitMix64& rng, double image_w, double image_h, double min_size,
               double max_size) {
    const double w = rng.uniform(min_size, max_size);
    const double h = rng.uniform(min_size, max_size);
    const double x1 = rng.uniform(0.0, std::max(image_w - w, 0.0));
    const double y1 = rng.uniform(0.0, std::max(image_h - h, 0.0));
    return Box{x1, y1, x1 + w, y1 + h};
}

std::vector<Detection> random_detections(SplitMix64& rng, int count, int num_classes,
                                         double image_w, double image_h) {
    std::vector<Detection> dets;
    dets.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Detection d;
        d.box = random_box(rng, image_w, image_h, 4.0, 0.5 * image_w);
        d.class_id = static_cast<int>(rng.uniform_int(0, num_classes - 1));
        d.confidence = rng.next_double();
        dets.push_back(d);
    }
    return dets;
}

std::vector<GtObject> random_gts(SplitMix64& rng, int count, int num_classes, double image_w,
                                 double image_h) {
    std::vector<GtObject> gts;
    gts.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        GtObject g;
        g.box = random_box(rng, image_w, image_h, 4.0, 0.5 * image_w);
        g.class_id = static_cast<int>(rng.uniform_int(0, num_classes - 1));
        gts.push_back(g);
    }
    return gts;
}

}  // namespace na::verify
