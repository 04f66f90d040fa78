// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include "noisy_anchor/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace na {

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thresh) {
    if (iou_thresh < 0.0 || iou_thresh > 1.0) {
        throw std::invalid_argument("nms threshold must be in [0, 1]");
    }
    std::vector<int> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (dets[static_cast<std::size_t>(a)].confidence !=
            dets[static_cast<std::size_t>(b)].confidence) {
            return dets[static_cast<std::size_t>(a)].confidence >
                   dets[static_cast<std::size_t>(b)].confidence;
        }
        return a < b;
    });

    std::vector<Detection> kept;
    kept.reserve(dets.size());
    for (int idx : order) {
        const Detection& d = dets[static_cast<std::size_t>(idx)];
        bool suppressed = false;
        for (const Detection& k : kept) {
            if (k.class_id == d.class_id && iou(k.box, d.box) > iou_thresh) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

namespace {

struct RankedDet {
    std::size_t scene;
    std::size_t index;  // original index within the scene
    double confidence;
    int class_id;
};

std::vector<RankedDet> ranked_detections(const std::vector<std::vector<Detection>>& dets) {
    std::vector<RankedDet> all;
    for (std::size_t s = 0; s < dets.size(); ++s) {
        for (std::size_t i = 0; i < dets[s].size(); ++i) {
            all.push_back(RankedDet{s, i, dets[s][i].confidence, dets[s][i].class_id});
        }
    }
    std::sort(all.begin(), all.end(), [](const RankedDet& a, const RankedDet& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        if (a.scene != b.scene) return a.scene < b.scene;
        return a.index < b.index;
    });
    return all;
}

/// Greedy TP/FP flags for one class at one threshold, in ranked order.
std::vector<char> match_class(const std::vector<std::vector<Detection>>& dets,
                              const std::vector<std::vector<GtObject>>& gts,
                              const std::vector<RankedDet>& ranked, int class_id,
                              double iou_thresh) {
    std::vector<std::vector<char>> taken(gts.size());
    for (std::size_t s = 0; s < gts.size(); ++s) taken[s].assign(gts[s].size(), 0);

    std::vector<char> tp;
    tp.reserve(ranked.size());
    for (const RankedDet& rd : ranked) {
        if (rd.class_id != class_id) continue;
        const Box& db = dets[rd.scene][rd.index].box;
        double best = -1.0;
        int best_gt = -1;
        const auto& scene_gts = gts[rd.scene];
        for (std::size_t j = 0; j < scene_gts.size(); ++j) {
            if (scene_gts[j].class_id != class_id || taken[rd.scene][j]) continue;
            const double v = iou(db, scene_gts[j].box);
            if (v >= iou_thresh && v > best) {
                best = v;
                best_gt = static_cast<int>(j);
            }
        }
        if (best_gt >= 0) {
            taken[rd.scene][static_cast<std::size_t>(best_gt)] = 1;
            tp.push_back(1);
        } else {
            tp.push_back(0);
        }
    }
    return tp;
}

/// 101-point interpolated AP from ranked TP flags.
std::array<double, kRecallSamples> interpolate_precision(const std::vector<char>& tp,
                                                         std::size_t npig) {
    std::array<double, kRecallSamples> out{};
    if (npig == 0) return out;

    const std::size_t n = tp.size();
    std::vector<double> precision(n), recall(n);
    std::size_t cum_tp = 0;
    for (std::size_t k = 0; k < n; ++k) {
        cum_tp += static_cast<std::size_t>(tp[k]);
        precision[k] = static_cast<double>(cum_tp) / static_cast<double>(k + 1);
        recall[k] = static_cast<double>(cum_tp) / static_cast<double>(npig);
    }
    // Monotone envelope from the right, as in the COCO accumulate step.
    for (std::size_t k = n; k-- > 1;) {
        precision[k - 1] = std::max(precision[k - 1], precision[k]);
    }

    std::size_t pos = 0;
    for (int g = 0; g < kRecallSamples; ++g) {
        const double r = static_cast<double>(g) / (kRecallSamples - 1);
        while (pos < n && recall[pos] < r) ++pos;
        out[static_cast<std::size_t>(g)] = pos < n ? precision[pos] : 0.0;
    }
    return out;
}

struct ClassCurves {
    std::vector<std::array<double, kRecallSamples>> per_class;
};

/// Per-class interpolated precision arrays for the classes that count
/// toward the mean: any class with ground truth, plus classes that have
/// detections but no ground truth (scored 0). Classes absent from both
/// are skipped.
ClassCurves per_class_curves(const std::vector<std::vector<Detection>>& dets,
                             const std::vector<std::vector<GtObject>>& gts, double iou_thresh) {
    if (dets.size() != gts.size()) {
        throw std::invalid_argument("detections and ground truths must cover the same scenes");
    }
    std::set<int> classes;
    std::map<int, std::size_t> gt_count;
    for (const auto& scene : gts) {
        for (const auto& g : scene) {
            classes.insert(g.class_id);
            ++gt_count[g.class_id];
        }
    }
    for (const auto& scene : dets) {
        for (const auto& d : scene) classes.insert(d.class_id);
    }

    const std::vector<RankedDet> ranked = ranked_detections(dets);

    ClassCurves out;
    for (int c : classes) {
        const std::size_t npig = gt_count.count(c) ? gt_count[c] : 0;
        const std::vector<char> tp = match_class(dets, gts, ranked, c, iou_thresh);
        if (npig == 0 && tp.empty()) continue;  // class never appears
        out.per_class.push_back(interpolate_precision(tp, npig));
    }
    return out;
}

}  // namespace

PrCurve pr_curve(const std::vector<std::vector<Detection>>& dets_per_scene,
                 const std::vector<std::vector<GtObject>>& gts_per_scene, double iou_thresh) {
    const ClassCurves curves = per_class_curves(dets_per_scene, gts_per_scene, iou_thresh);

    PrCurve out;
    out.iou_thresh = iou_thresh;
    if (curves.per_class.empty()) {
        // Nothing to detect and nothing detected: vacuously perfect.
        out.precision.fill(1.0);
        out.ap = 1.0;
        return out;
    }
    for (const auto& pc : curves.per_class) {
        for (int g = 0; g < kRecallSamples; ++g) out.precision[static_cast<std::size_t>(g)] += pc[static_cast<std::size_t>(g)];
    }
    const double inv = 1.0 / static_cast<double>(curves.per_class.size());
    double sum = 0.0;
    for (auto& v : out.precision) {
        v *= inv;
        sum += v;
    }
    out.ap = sum / kRecallSamples;
    return out;
}

double average_precision(const std::vector<std::vector<Detection>>& dets_per_scene,
                         const std::vector<std::vector<GtObject>>& gts_per_scene,
                         double iou_thresh) {
    return pr_curve(dets_per_scene, gts_per_scene, iou_thresh).ap;
}

ConfIouStats confidence_iou_stats(const std::vector<std::vector<Detection>>& dets_per_scene,
                                  const std::vector<std::vector<GtObject>>& gts_per_scene,
                                  double top_fraction) {
    if (!(top_fraction > 0.0) || top_fraction > 1.0) {
        throw std::invalid_argument("top_fraction must be in (0, 1]");
    }
    if (dets_per_scene.size() != gts_per_scene.size()) {
        throw std::invalid_argument("detections and ground truths must cover the same scenes");
    }

    const std::vector<RankedDet> ranked = ranked_detections(dets_per_scene);
    ConfIouStats out;
    if (ranked.empty()) return out;

    const std::size_t k = std::min<std::size_t>(
        ranked.size(),
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(
                                     top_fraction * static_cast<double>(ranked.size())))));

    double sum_c = 0.0, sum_i = 0.0, sum_cc = 0.0, sum_ii = 0.0, sum_ci = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
        const RankedDet& rd = ranked[t];
        const Detection& d = dets_per_scene[rd.scene][rd.index];
        double best = 0.0;
        for (const auto& g : gts_per_scene[rd.scene]) {
            if (g.class_id != d.class_id) continue;
            best = std::max(best, iou(d.box, g.box));
        }
        sum_c += d.confidence;
        sum_i += best;
        sum_cc += d.confidence * d.confidence;
        sum_ii += best * best;
        sum_ci += d.confidence * best;
    }

    const double n = static_cast<double>(k);
    out.count = k;
    out.mean_confidence = sum_c / n;
    out.mean_iou = sum_i / n;

    if (k >= 2) {
        const double var_c = sum_cc - sum_c * sum_c / n;
        const double var_i = sum_ii - sum_i * sum_i / n;
        const double cov = sum_ci - sum_c * sum_i / n;
        if (var_c > 0.0 && var_i > 0.0) {
            out.pearson = cov / std::sqrt(var_c * var_i);
        }
    }
    return out;
}

std::vector<double> coco_iou_thresholds() {
    std::vector<double> t;
    for (int k = 0; k < 10; ++k) t.push_back(0.5 + 0.05 * k);
    return t;
}

EvalReport evaluate(const std::vector<std::vector<Detection>>& raw_dets_per_scene,
                    const std::vector<std::vector<GtObject>>& gts_per_scene,
                    const EvalOptions& options) {
    EvalReport report;
    report.before_nms = confidence_iou_stats(raw_dets_per_scene, gts_per_scene,
                                             options.top_fraction);

    std::vector<std::vector<Detection>> kept(raw_dets_per_scene.size());
    for (std::size_t s = 0; s < raw_dets_per_scene.size(); ++s) {
        kept[s] = nms(raw_dets_per_scene[s], options.nms_iou);
        if (static_cast<int>(kept[s].size()) > options.max_detections) {
            kept[s].resize(static_cast<std::size_t>(options.max_detections));
        }
    }

    report.after_nms = confidence_iou_stats(kept, gts_per_scene, options.top_fraction);

    double sum = 0.0;
    for (double t : coco_iou_thresholds()) {
        report.curves.push_back(pr_curve(kept, gts_per_scene, t));
        sum += report.curves.back().ap;
    }
    report.mean_ap = sum / static_cast<double>(report.curves.size());
    report.ap50 = report.curves[0].ap;
    report.ap75 = report.curves[5].ap;
    return report;
}

namespace {

nlohmann::json stats_json(const ConfIouStats& s) {
    nlohmann::json j;
    j["count"] = s.count;
    j["mean_confidence"] = s.mean_confidence ? nlohmann::json(*s.mean_confidence) : nlohmann::json();
    j["mean_iou"] = s.mean_iou ? nlohmann::json(*s.mean_iou) : nlohmann::json();
    j["pearson"] = s.pearson ? nlohmann::json(*s.pearson) : nlohmann::json();
    return j;
}

}  // namespace

std::string eval_report_json(const EvalReport& report) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["mean_ap"] = report.mean_ap;
    j["ap50"] = report.ap50;
    j["ap75"] = report.ap75;
    nlohmann::json curves = nlohmann::json::array();
    for (const auto& c : report.curves) {
        nlohmann::json cj;
        cj["iou_threshold"] = c.iou_thresh;
        cj["ap"] = c.ap;
        cj["precision"] = c.precision;
        curves.push_back(cj);
    }
    j["pr_curves"] = curves;
    j["before_nms"] = stats_json(report.before_nms);
    j["after_nms"] = stats_json(report.after_nms);
    return j.dump(2);
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string eval_report_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "iou_threshold,ap\n";
    for (const auto& c : report.curves) {
        os << fmt(c.iou_thresh) << "," << fmt(c.ap) << "\n";
    }
    return os.str();
}

std::string pr_curves_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "iou_threshold,recall,precision\n";
    for (const auto& c : report.curves) {
        for (int g = 0; g < kRecallSamples; ++g) {
            os << fmt(c.iou_thresh) << "," << fmt(static_cast<double>(g) / (kRecallSamples - 1))
               << "," << fmt(c.precision[static_cast<std::size_t>(g)]) << "\n";
        }
    }
    return os.str();
}

}  // namespace na
