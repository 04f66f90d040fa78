// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include "noisy_anchor/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "noisy_anchor/prng.hpp"
#include "noisy_anchor/verify.hpp"

namespace na {

namespace fs = std::filesystem;

std::uint64_t train_scene_base(int seed) {
    return static_cast<std::uint64_t>(seed) * 1000003ULL + 1ULL;
}

std::uint64_t eval_scene_base(int seed) {
    return static_cast<std::uint64_t>(seed) * 1000003ULL + 500001ULL;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Epoch-shuffled scene index stream.
class SceneSampler {
public:
    SceneSampler(std::size_t n, std::uint64_t seed) : rng_(seed), order_(n) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        reshuffle();
    }

    std::size_t next() {
        if (cursor_ == order_.size()) {
            reshuffle();
            cursor_ = 0;
        }
        return order_[cursor_++];
    }

private:
    void reshuffle() {
        for (std::size_t i = order_.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng_.next_below(i));
            std::swap(order_[i - 1], order_[j]);
        }
    }

    SplitMix64 rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

TrainHyper hyper_from(const ExperimentConfig& config) {
    TrainHyper hp;
    hp.assign = config.assign;
    hp.focal = config.focal;
    hp.method = config.method;
    hp.smooth_l1_beta = config.smooth_l1_beta;
    return hp;
}

HeadConfig head_from(const ExperimentConfig& config) {
    HeadConfig hc;
    hc.feature_dim = feature_dim(config.gen.num_classes);
    hc.num_classes = config.gen.num_classes;
    hc.hidden_dim = config.hidden_dim;
    return hc;
}

SgdConfig sgd_from(const ExperimentConfig& config) {
    SgdConfig opt;
    opt.learning_rate = config.learning_rate;
    opt.milestones = config.lr_milestones;
    opt.decay = config.lr_decay;
    opt.momentum = config.momentum;
    opt.weight_decay = config.weight_decay;
    return opt;
}

}  // namespace

std::vector<Detection> detect_scene(const HeadParams& params, const Scene& scene,
                                    const AnchorSet& anchors, const ExperimentConfig& config) {
    const ForwardResult fwd = forward(params, scene.features);

    struct Cand {
        double conf;
        std::size_t anchor;
        std::size_t cls;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < fwd.probs.rows; ++i) {
        for (std::size_t k = 0; k < fwd.probs.cols; ++k) {
            const double c = fwd.probs(i, k);
            if (c >= config.eval_score_floor) cands.push_back(Cand{c, i, k});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.conf != b.conf) return a.conf > b.conf;
        if (a.anchor != b.anchor) return a.anchor < b.anchor;
        return a.cls < b.cls;
    });
    if (cands.size() > static_cast<std::size_t>(config.eval_pre_nms_topk)) {
        cands.resize(static_cast<std::size_t>(config.eval_pre_nms_topk));
    }

    std::vector<Detection> dets;
    dets.reserve(cands.size());
    for (const Cand& c : cands) {
        Detection d;
        d.box = clip_box(decode(anchors.boxes[c.anchor], fwd.deltas[c.anchor]),
                         scene.image_width, scene.image_height);
        d.class_id = static_cast<int>(c.cls);
        d.confidence = c.conf;
        dets.push_back(d);
    }
    return dets;
}

SeedResult run_seed(const ExperimentConfig& config, int seed) {
    SeedResult result;
    result.seed = seed;
    try {
        const AnchorSet anchors = generate(config.anchors);
        const TrainHyper hp = hyper_from(config);

        const std::vector<Scene> train = generate_split(config.gen, anchors,
                                                        train_scene_base(seed),
                                                        config.gen.train_scenes);
        if (train.empty() && config.train_iterations > 0) {
            throw std::runtime_error("no training scenes configured");
        }

        TrainState state = TrainState::init(head_from(config), sgd_from(config),
                                            SplitMix64::derive_stream(
                                                static_cast<std::uint64_t>(seed), 11));
        SceneSampler sampler(train.size(),
                             SplitMix64::derive_stream(static_cast<std::uint64_t>(seed), 23));

        const double inv_batch = 1.0 / static_cast<double>(config.batch_size);
        for (int it = 0; it < config.train_iterations; ++it) {
            ParamGrads grads;
            double cls_loss = 0.0, reg_loss = 0.0;
            for (int b = 0; b < config.batch_size; ++b) {
                const SceneEval ev = evaluate_scene(state.params, train[sampler.next()], anchors, hp);
                grads.accumulate(ev.grads, inv_batch);
                cls_loss += ev.losses.cls_loss * inv_batch;
                reg_loss += ev.losses.reg_loss * inv_batch;
            }
            if (!std::isfinite(cls_loss) || !std::isfinite(reg_loss)) {
                result.error = "non-finite loss at iteration " + std::to_string(it);
                return result;
            }
            if (it % config.loss_sample_every == 0) {
                result.loss_curve.push_back(LossSample{it, cls_loss, reg_loss});
            }
            apply_update(state, grads);
        }

        const std::vector<Scene> eval_scenes = generate_split(config.gen, anchors,
                                                              eval_scene_base(seed),
                                                              config.gen.eval_scenes);
        std::vector<std::vector<Detection>> dets(eval_scenes.size());
        std::vector<std::vector<GtObject>> gts(eval_scenes.size());
        for (std::size_t s = 0; s < eval_scenes.size(); ++s) {
            dets[s] = detect_scene(state.params, eval_scenes[s], anchors, config);
            gts[s] = eval_scenes[s].gts;
        }

        EvalOptions opt;
        opt.nms_iou = config.eval_nms_iou;
        opt.top_fraction = config.eval_top_fraction;
        opt.max_detections = config.eval_max_detections;
        result.eval = evaluate(dets, gts, opt);
        result.ok = true;
    } catch (const std::exception& e) {
        result.ok = false;
        result.error = e.what();
    }
    return result;
}

RunRecord run_experiment(const ExperimentConfig& config) {
    config.validate();
    if (config.seeds.empty()) {
        throw ConfigError("run.seeds is empty: refusing to run nothing");
    }

    const auto start = std::chrono::steady_clock::now();

    RunRecord record;
    record.config_hash = config_hash_hex(config);
    record.method = config.method_name();
    record.config_text = experiment_text(config);
    record.seeds.resize(config.seeds.size());

    const std::size_t n = config.seeds.size();
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.workers), n);

    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) record.seeds[i] = run_seed(config, config.seeds[i]);
    } else {
        std::atomic<std::size_t> cursor{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t i = cursor.fetch_add(1);
                if (i >= n) return;
                record.seeds[i] = run_seed(config, config.seeds[i]);
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::vector<double> aps, ap50s, ap75s;
    for (const auto& s : record.seeds) {
        if (!s.ok) continue;
        aps.push_back(s.eval.mean_ap);
        ap50s.push_back(s.eval.ap50);
        ap75s.push_back(s.eval.ap75);
    }
    record.seeds_ok = static_cast<int>(aps.size());
    if (!aps.empty()) {
        const double n_ok = static_cast<double>(aps.size());
        record.ap_mean = std::accumulate(aps.begin(), aps.end(), 0.0) / n_ok;
        record.ap50_mean = std::accumulate(ap50s.begin(), ap50s.end(), 0.0) / n_ok;
        record.ap75_mean = std::accumulate(ap75s.begin(), ap75s.end(), 0.0) / n_ok;
        double var = 0.0;
        for (double v : aps) var += (v - record.ap_mean) * (v - record.ap_mean);
        record.ap_std = std::sqrt(var / n_ok);
    }

    record.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return record;
}

namespace {

nlohmann::json stats_to_json(const ConfIouStats& s) {
    nlohmann::json j;
    j["count"] = s.count;
    j["mean_confidence"] = s.mean_confidence ? nlohmann::json(*s.mean_confidence) : nlohmann::json();
    j["mean_iou"] = s.mean_iou ? nlohmann::json(*s.mean_iou) : nlohmann::json();
    j["pearson"] = s.pearson ? nlohmann::json(*s.pearson) : nlohmann::json();
    return j;
}

nlohmann::json eval_to_json(const EvalReport& e) {
    nlohmann::json j;
    j["mean_ap"] = e.mean_ap;
    j["ap50"] = e.ap50;
    j["ap75"] = e.ap75;
    j["before_nms"] = stats_to_json(e.before_nms);
    j["after_nms"] = stats_to_json(e.after_nms);
    nlohmann::json curves = nlohmann::json::array();
    for (const auto& c : e.curves) {
        nlohmann::json cj;
        cj["iou_threshold"] = c.iou_thresh;
        cj["ap"] = c.ap;
        cj["precision"] = c.precision;
        curves.push_back(cj);
    }
    j["pr_curves"] = curves;
    return j;
}

}  // namespace

std::string run_record_json(const RunRecord& record) {
    nlohmann::json j;
    j["schema_version"] = record.schema_version;
    j["config_hash"] = record.config_hash;
    j["method"] = record.method;
    j["config_text"] = record.config_text;
    nlohmann::json agg;
    agg["seeds_ok"] = record.seeds_ok;
    agg["ap_mean"] = record.ap_mean;
    agg["ap_std"] = record.ap_std;
    agg["ap50_mean"] = record.ap50_mean;
    agg["ap75_mean"] = record.ap75_mean;
    j["aggregate"] = agg;

    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& s : record.seeds) {
        nlohmann::json sj;
        sj["seed"] = s.seed;
        sj["ok"] = s.ok;
        sj["error"] = s.error;
        if (s.ok) sj["eval"] = eval_to_json(s.eval);
        nlohmann::json curve = nlohmann::json::array();
        for (const auto& ls : s.loss_curve) {
            curve.push_back(nlohmann::json::array({ls.iteration, ls.cls_loss, ls.reg_loss}));
        }
        sj["loss_curve"] = curve;
        seeds.push_back(sj);
    }
    j["per_seed"] = seeds;
    j["wall_clock_seconds"] = record.wall_clock_seconds;
    return j.dump(2);
}

std::string write_run_record(const RunRecord& record, const std::string& dir) {
    fs::create_directories(dir);
    const std::string path =
        (fs::path(dir) / ("run_" + record.method + "_" + record.config_hash + ".json")).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write run record: " + path);
    f << run_record_json(record) << "\n";
    return path;
}

SweepAxis sweep_axis_from_name(const std::string& name) {
    if (name == "alpha") return SweepAxis::kAlpha;
    if (name == "gamma") return SweepAxis::kGamma;
    if (name == "n_pos") return SweepAxis::kTopN;
    throw ConfigError("unknown sweep axis '" + name + "' (expected alpha, gamma or n_pos)");
}

std::string sweep_axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::kAlpha: return "alpha";
        case SweepAxis::kGamma: return "gamma";
        case SweepAxis::kTopN: return "n_pos";
    }
    return "?";
}

std::vector<RunRecord> run_sweep(const ExperimentConfig& config, SweepAxis axis,
                                 const std::vector<double>& values) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");

    std::vector<RunRecord> records;
    records.reserve(values.size());
    for (double v : values) {
        ExperimentConfig point = config;
        switch (axis) {
            case SweepAxis::kAlpha:
                point.assign.alpha = v;
                break;
            case SweepAxis::kGamma:
                point.assign.gamma = v;
                break;
            case SweepAxis::kTopN: {
                const int n = static_cast<int>(v);
                if (static_cast<double>(n) != v || n < 1) {
                    throw ConfigError("n_pos sweep values must be positive integers");
                }
                point.assign.top_n = n;
                break;
            }
        }
        records.push_back(run_experiment(point));
    }
    return records;
}

std::string sweep_csv(SweepAxis axis, const std::vector<double>& values,
                      const std::vector<RunRecord>& records) {
    std::ostringstream os;
    os << sweep_axis_name(axis) << ",seeds_ok,ap_mean,ap_std,ap50_mean,ap75_mean\n";
    for (std::size_t i = 0; i < records.size() && i < values.size(); ++i) {
        const auto& r = records[i];
        os << fmt(values[i]) << "," << r.seeds_ok << "," << fmt(r.ap_mean) << ","
           << fmt(r.ap_std) << "," << fmt(r.ap50_mean) << "," << fmt(r.ap75_mean) << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Reporting over stored run records.

namespace {

struct LoadedRecord {
    std::string file;
    std::string method;
    std::string hash;
    int seeds_ok = 0;
    double ap_mean = 0.0, ap_std = 0.0, ap50 = 0.0, ap75 = 0.0;

    // Means over completed seeds.
    double mean_conf_before = 0.0, mean_iou_before = 0.0;
    double mean_conf_after = 0.0, mean_iou_after = 0.0;
    std::optional<double> pearson_before;

    // Mean PR curves: [threshold][recall sample].
    std::vector<double> thresholds;
    std::vector<std::array<double, kRecallSamples>> precision;
};

LoadedRecord parse_record_file(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open run record: " + path.string());
    nlohmann::json j;
    f >> j;

    LoadedRecord rec;
    rec.file = path.filename().string();
    rec.method = j.at("method").get<std::string>();
    rec.hash = j.at("config_hash").get<std::string>();
    const auto& agg = j.at("aggregate");
    rec.seeds_ok = agg.at("seeds_ok").get<int>();
    rec.ap_mean = agg.at("ap_mean").get<double>();
    rec.ap_std = agg.at("ap_std").get<double>();
    rec.ap50 = agg.at("ap50_mean").get<double>();
    rec.ap75 = agg.at("ap75_mean").get<double>();

    int n_ok = 0;
    int n_pearson = 0;
    double pearson_sum = 0.0;
    for (const auto& sj : j.at("per_seed")) {
        if (!sj.at("ok").get<bool>()) continue;
        const auto& ev = sj.at("eval");
        ++n_ok;
        const auto& before = ev.at("before_nms");
        const auto& after = ev.at("after_nms");
        if (!before.at("mean_confidence").is_null()) {
            rec.mean_conf_before += before.at("mean_confidence").get<double>();
            rec.mean_iou_before += before.at("mean_iou").get<double>();
        }
        if (!after.at("mean_confidence").is_null()) {
            rec.mean_conf_after += after.at("mean_confidence").get<double>();
            rec.mean_iou_after += after.at("mean_iou").get<double>();
        }
        if (!before.at("pearson").is_null()) {
            pearson_sum += before.at("pearson").get<double>();
            ++n_pearson;
        }

        const auto& curves = ev.at("pr_curves");
        if (rec.thresholds.empty()) {
            rec.thresholds.reserve(curves.size());
            rec.precision.assign(curves.size(), {});
            for (const auto& c : curves) rec.thresholds.push_back(c.at("iou_threshold").get<double>());
        }
        for (std::size_t t = 0; t < curves.size() && t < rec.precision.size(); ++t) {
            const auto& pr = curves[t].at("precision");
            for (int g = 0; g < kRecallSamples; ++g) {
                rec.precision[t][static_cast<std::size_t>(g)] += pr[static_cast<std::size_t>(g)].get<double>();
            }
        }
    }
    if (n_ok > 0) {
        const double inv = 1.0 / n_ok;
        rec.mean_conf_before *= inv;
        rec.mean_iou_before *= inv;
        rec.mean_conf_after *= inv;
        rec.mean_iou_after *= inv;
        for (auto& row : rec.precision) {
            for (auto& v : row) v *= inv;
        }
    }
    if (n_pearson > 0) rec.pearson_before = pearson_sum / n_pearson;
    return rec;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write: " + path.string());
    f << text;
}

}  // namespace

std::string write_report(const std::string& run_dir) {
    std::vector<fs::path> files;
    if (fs::is_directory(run_dir)) {
        for (const auto& entry : fs::directory_iterator(run_dir)) {
            const std::string name = entry.path().filename().string();
            if (entry.is_regular_file() && name.rfind("run_", 0) == 0 &&
                entry.path().extension() == ".json") {
                files.push_back(entry.path());
            }
        }
    }
    if (files.empty()) {
        throw std::runtime_error("no run records (run_*.json) found in: " + run_dir);
    }
    std::sort(files.begin(), files.end());

    std::vector<LoadedRecord> records;
    records.reserve(files.size());
    for (const auto& f : files) records.push_back(parse_record_file(f));
    std::sort(records.begin(), records.end(), [](const LoadedRecord& a, const LoadedRecord& b) {
        if (a.method != b.method) return a.method < b.method;
        return a.hash < b.hash;
    });

    std::ostringstream methods_csv;
    methods_csv << "method,config_hash,seeds_ok,ap_mean,ap_std,ap50_mean,ap75_mean\n";
    std::ostringstream stats_csv;
    stats_csv << "method,config_hash,phase,mean_confidence,mean_iou,pearson\n";
    std::ostringstream summary;
    summary << "run report: " << run_dir << "\n";

    for (const auto& r : records) {
        methods_csv << r.method << "," << r.hash << "," << r.seeds_ok << "," << fmt(r.ap_mean)
                    << "," << fmt(r.ap_std) << "," << fmt(r.ap50) << "," << fmt(r.ap75) << "\n";
        stats_csv << r.method << "," << r.hash << ",before_nms," << fmt(r.mean_conf_before) << ","
                  << fmt(r.mean_iou_before) << ","
                  << (r.pearson_before ? fmt(*r.pearson_before) : "") << "\n";
        stats_csv << r.method << "," << r.hash << ",after_nms," << fmt(r.mean_conf_after) << ","
                  << fmt(r.mean_iou_after) << ",\n";
        summary << "  " << r.method << " [" << r.hash << "]: mean AP " << fmt(r.ap_mean) << " +/- "
                << fmt(r.ap_std) << " over " << r.seeds_ok << " seeds\n";

        std::ostringstream pr;
        pr << "iou_threshold,recall,precision\n";
        for (std::size_t t = 0; t < r.thresholds.size(); ++t) {
            for (int g = 0; g < kRecallSamples; ++g) {
                pr << fmt(r.thresholds[t]) << ","
                   << fmt(static_cast<double>(g) / (kRecallSamples - 1)) << ","
                   << fmt(r.precision[t][static_cast<std::size_t>(g)]) << "\n";
            }
        }
        write_text(fs::path(run_dir) / ("pr_" + r.method + "_" + r.hash + ".csv"), pr.str());
    }

    write_text(fs::path(run_dir) / "methods.csv", methods_csv.str());
    write_text(fs::path(run_dir) / "stats.csv", stats_csv.str());
    write_text(fs::path(run_dir) / "report_summary.txt", summary.str());
    return summary.str();
}

std::string assignment_audit(const std::vector<Scene>& scenes, const ExperimentConfig& config) {
    std::size_t total_gts = 0, total_anchors = 0;
    std::size_t fg = 0, bg = 0, ignored = 0, topn_positives = 0;
    std::size_t gts_without_fg = 0;
    std::vector<double> gt_best_iou;

    for (const auto& scene : scenes) {
        AnchorConfig ac = config.anchors;
        ac.image_width = scene.image_width;
        ac.image_height = scene.image_height;
        const AnchorSet anchors = generate(ac);

        std::vector<Box> gt_boxes;
        for (const auto& g : scene.gts) gt_boxes.push_back(g.box);

        const HardAssignment hard = assign_hard(anchors, gt_boxes, config.assign);
        for (int label : hard.label) {
            if (label == 1) ++fg;
            else if (label == 0) ++bg;
            else ++ignored;
        }
        topn_positives +=
            select_positives(anchors, gt_boxes, config.assign.top_n, config.assign.min_pos_iou)
                .size();

        const MatrixD m = iou_matrix(anchors.boxes, gt_boxes);
        for (std::size_t j = 0; j < gt_boxes.size(); ++j) {
            double best = 0.0;
            for (std::size_t i = 0; i < anchors.size(); ++i) best = std::max(best, m(i, j));
            gt_best_iou.push_back(best);
            if (best < config.assign.fg_threshold) ++gts_without_fg;
        }

        total_gts += scene.gts.size();
        total_anchors += anchors.size();
    }

    std::sort(gt_best_iou.begin(), gt_best_iou.end());
    auto pct = [&](double q) {
        if (gt_best_iou.empty()) return 0.0;
        const std::size_t k = std::min(gt_best_iou.size() - 1,
                                       static_cast<std::size_t>(q * (gt_best_iou.size() - 1)));
        return gt_best_iou[k];
    };

    std::ostringstream os;
    os << "assignment audit over " << scenes.size() << " scenes\n";
    os << "  ground truths: " << total_gts << ", anchors: " << total_anchors << "\n";
    if (total_anchors > 0) {
        const double inv = 100.0 / static_cast<double>(total_anchors);
        os << "  hard labels: fg " << fmt(fg * inv) << "% / ignore " << fmt(ignored * inv)
           << "% / bg " << fmt(bg * inv) << "%\n";
    }
    os << "  top-" << config.assign.top_n << " positives: " << topn_positives;
    if (total_gts > 0) {
        os << " (" << fmt(static_cast<double>(topn_positives) / static_cast<double>(total_gts))
           << " per ground truth)";
    }
    os << "\n";
    os << "  ground truths below the fg threshold: " << gts_without_fg << "\n";
    os << "  best anchor IoU per ground truth: p10 " << fmt(pct(0.10)) << ", p50 "
       << fmt(pct(0.50)) << ", p90 " << fmt(pct(0.90)) << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Self-check suite (the `check` subcommand).

namespace {

struct CheckContext {
    std::ostream& out;
    int failures = 0;

    void check(const std::string& name, bool ok) {
        out << (ok ? "[ ok ] " : "[FAIL] ") << name << "\n";
        if (!ok) ++failures;
    }
};

AnchorSet tiny_anchor_set() {
    AnchorConfig ac;
    ac.levels = {{16.0, 16.0}};
    ac.aspect_ratios = {1.0};
    ac.scale_octaves = {1.0};
    ac.image_width = 64.0;
    ac.image_height = 64.0;
    return generate(ac);
}

}  // namespace

int run_selfcheck(std::ostream& out) {
    CheckContext ctx{out};

    {
        SplitMix64 g(0);
        const bool ok = g.next_u64() == 0xE220A8397B1DCDAFULL &&
                        g.next_u64() == 0x6E789E6AA1B965F4ULL &&
                        g.next_u64() == 0x06C45D188009454FULL;
        ctx.check("splitmix64 reference vectors", ok);
    }
    {
        const Box a{0, 0, 10, 10}, b{5, 0, 15, 10};
        bool ok = std::fabs(iou(a, b) - 1.0 / 3.0) < 1e-15;
        SplitMix64 rng(41);
        for (int i = 0; i < 500 && ok; ++i) {
            const Box x = verify::random_box(rng, 100, 100, 1, 60);
            const Box y = verify::random_box(rng, 100, 100, 1, 60);
            const double v = iou(x, y);
            ok = v >= 0.0 && v <= 1.0 && v == iou(y, x);
        }
        ctx.check("iou hand value, range and symmetry", ok);
    }
    {
        SplitMix64 rng(42);
        bool ok = true;
        for (int i = 0; i < 500 && ok; ++i) {
            const Box anchor = verify::random_box(rng, 100, 100, 2, 50);
            const Box target = verify::random_box(rng, 100, 100, 2, 50);
            const Box back = decode(anchor, encode(anchor, target));
            ok = std::fabs(back.x1 - target.x1) <= 1e-9 * std::max(1.0, std::fabs(target.x1)) &&
                 std::fabs(back.y2 - target.y2) <= 1e-9 * std::max(1.0, std::fabs(target.y2));
        }
        ctx.check("encode/decode round trip", ok);
    }
    {
        AnchorConfig ac;
        const AnchorSet set = generate(ac);
        ctx.check("anchor count formula", set.size() == anchor_count(ac));
    }
    {
        SplitMix64 rng(43);
        bool ok = true;
        for (int rep = 0; rep < 300 && ok; ++rep) {
            const int n = static_cast<int>(rng.uniform_int(1, 40));
            std::vector<double> loc(static_cast<std::size_t>(n)), cls(static_cast<std::size_t>(n));
            for (auto& v : loc) v = rng.next_double();
            for (auto& v : cls) v = rng.next_double();
            const auto r = reweight(loc, cls, 0.75, 1.0, 1e-4);
            const double mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
            ok = std::fabs(mean - 1.0) <= 1e-9;
        }
        ctx.check("reweight mean-one normalization", ok);
        const auto ones = reweight({0.2, 0.9}, {0.5, 0.1}, 0.75, 0.0, 1e-4);
        ctx.check("gamma=0 disables reweighting", ones[0] == 1.0 && ones[1] == 1.0);
    }
    {
        const AnchorSet anchors = tiny_anchor_set();
        SplitMix64 rng(44);
        bool ok = true;
        for (int rep = 0; rep < 50 && ok; ++rep) {
            const std::vector<Box> gts = {verify::random_box(rng, 64, 64, 8, 40)};
            std::vector<double> probs(anchors.size());
            for (auto& p : probs) p = rng.next_double();
            const std::vector<BoxDelta> zero(anchors.size());
            const Assignment a = assign_clean(anchors, gts, probs, zero, AssignParams{});
            for (std::size_t i = 0; i < anchors.size() && ok; ++i) {
                if (a.role[i] != AnchorRole::kPositive) continue;
                ok = a.loc_accuracy[i] == iou(anchors.boxes[i], gts[0]);
            }
        }
        ctx.check("cold start: zero deltas give anchor IoU bitwise", ok);
    }
    {
        SplitMix64 rng(45);
        bool ok = true;
        for (int rep = 0; rep < 300 && ok; ++rep) {
            const int n = static_cast<int>(rng.uniform_int(0, 50));
            const auto dets = verify::random_detections(rng, n, 3, 100, 100);
            const auto ours = nms(dets, 0.5);
            const auto ref = verify::nms_reference(dets, 0.5);
            ok = ours.size() == ref.size();
            for (std::size_t i = 0; ok && i < ours.size(); ++i) {
                ok = ours[i].box == ref[i].box && ours[i].class_id == ref[i].class_id &&
                     ours[i].confidence == ref[i].confidence;
            }
        }
        ctx.check("nms matches exhaustive reference", ok);
    }
    {
        SplitMix64 rng(46);
        bool ok = true;
        for (int rep = 0; rep < 150 && ok; ++rep) {
            const int scenes = static_cast<int>(rng.uniform_int(1, 3));
            std::vector<std::vector<Detection>> dets(static_cast<std::size_t>(scenes));
            std::vector<std::vector<GtObject>> gts(static_cast<std::size_t>(scenes));
            for (int s = 0; s < scenes; ++s) {
                dets[static_cast<std::size_t>(s)] = verify::random_detections(
                    rng, static_cast<int>(rng.uniform_int(0, 10)), 2, 100, 100);
                gts[static_cast<std::size_t>(s)] = verify::random_gts(
                    rng, static_cast<int>(rng.uniform_int(0, 4)), 2, 100, 100);
            }
            const double ours = average_precision(dets, gts, 0.5);
            const double ref = verify::average_precision_reference(dets, gts, 0.5);
            ok = std::fabs(ours - ref) <= 1e-12;
        }
        ctx.check("average precision matches brute-force reference", ok);
    }
    {
        SplitMix64 rng(47);
        bool ok = true;
        for (int rep = 0; rep < 200 && ok; ++rep) {
            const int n = static_cast<int>(rng.uniform_int(2, 40));
            std::vector<std::vector<Detection>> dets(1);
            std::vector<std::vector<GtObject>> gts(1);
            dets[0] = verify::random_detections(rng, n, 1, 100, 100);
            gts[0] = verify::random_gts(rng, 3, 1, 100, 100);
            const auto stats = confidence_iou_stats(dets, gts, 1.0);
            std::vector<double> xs, ys;
            // Recompute the selection the same way to feed the reference.
            std::vector<std::pair<double, double>> pairs;
            for (const auto& d : dets[0]) {
                double best = 0.0;
                for (const auto& g : gts[0]) {
                    if (g.class_id == d.class_id) best = std::max(best, iou(d.box, g.box));
                }
                pairs.emplace_back(d.confidence, best);
            }
            std::sort(pairs.begin(), pairs.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
            for (const auto& [c, i] : pairs) {
                xs.push_back(c);
                ys.push_back(i);
            }
            const auto ref = verify::pearson_reference(xs, ys);
            if (stats.pearson.has_value() != ref.has_value()) {
                ok = false;
            } else if (stats.pearson) {
                ok = std::fabs(*stats.pearson - *ref) <= 1e-12;
            }
        }
        ctx.check("pearson matches textbook reference", ok);
    }
    {
        const AnchorSet anchors = tiny_anchor_set();
        SplitMix64 rng(48);
        bool ok = true;
        for (int rep = 0; rep < 10 && ok; ++rep) {
            const std::vector<Box> gts = {verify::random_box(rng, 64, 64, 10, 40),
                                          verify::random_box(rng, 64, 64, 10, 40)};
            MatrixD probs(anchors.size(), 1);
            std::vector<BoxDelta> deltas(anchors.size());
            MatrixD logits(anchors.size(), 1);
            for (std::size_t i = 0; i < anchors.size(); ++i) {
                logits(i, 0) = rng.uniform(-3.0, 3.0);
                probs(i, 0) = 1.0 / (1.0 + std::exp(-logits(i, 0)));
                deltas[i] = BoxDelta{rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4),
                                     rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4)};
            }
            AssignParams ap;
            ap.top_n = 5;
            const Assignment a =
                assign_clean(anchors, gts, std::vector<int>(gts.size(), 0), probs, deltas, ap);
            const FocalParams fp;
            const ClassificationLoss cls = classification_loss(probs, a, fp);
            const auto frozen = verify::freeze_classification(probs, a, fp);

            std::vector<double*> ptrs;
            for (auto& v : logits.data) ptrs.push_back(&v);
            auto frozen_loss = [&]() { return frozen.value(logits); };
            const auto numeric = verify::finite_difference(frozen_loss, ptrs, 1e-6);
            ok = verify::max_relative_error(cls.grad_logits.data, numeric) <= 1e-5;
        }
        ctx.check("classification gradient vs finite differences", ok);
    }

    out << (ctx.failures == 0 ? "all checks passed\n"
                              : std::to_string(ctx.failures) + " check(s) failed\n");
    return ctx.failures;
}

}  // namespace na
