// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "noisy_anchor/config.hpp"
#include "noisy_anchor/evalkit.hpp"
#include "noisy_anchor/model.hpp"
#include "noisy_anchor/synthdata.hpp"

namespace na {

struct LossSample {
    int iteration = 0;
    double cls_loss = 0.0;
    double reg_loss = 0.0;
};

struct SeedResult {
    int seed = 0;
    bool ok = false;
    std::string error;  // populated when a seed aborts (non-finite loss, ...)
    EvalReport eval;
    std::vector<LossSample> loss_curve;
};

/// One experiment's outcome: per-seed evaluations plus aggregates over
/// the seeds that completed. wall_clock_seconds is the only
/// non-deterministic field; byte comparisons must drop it.
struct RunRecord {
    int schema_version = 1;
    std::string config_hash;
    std::string method;
    std::string config_text;
    std::vector<SeedResult> seeds;
    int seeds_ok = 0;
    double ap_mean = 0.0;
    double ap_std = 0.0;
    double ap50_mean = 0.0;
    double ap75_mean = 0.0;
    double wall_clock_seconds = 0.0;
};

/// Deterministic scene seeds for one training seed. Train and eval
/// ranges are disjoint for any scene count below 500000.
std::uint64_t train_scene_base(int seed);
std::uint64_t eval_scene_base(int seed);

/// Train and evaluate one seed. Never throws for numeric failures; those
/// come back as ok = false with the reason recorded.
SeedResult run_seed(const ExperimentConfig& config, int seed);

/// Run every configured seed (in parallel up to config.workers) and
/// aggregate. Throws ConfigError when the seed list is empty.
RunRecord run_experiment(const ExperimentConfig& config);

/// Raw (pre-NMS) detections for one scene under the current parameters:
/// per anchor and class, confidences above the score floor, decoded
/// boxes clipped to the image, descending confidence, capped at
/// eval.pre_nms_topk.
std::vector<Detection> detect_scene(const HeadParams& params, const Scene& scene,
                                    const AnchorSet& anchors, const ExperimentConfig& config);

std::string run_record_json(const RunRecord& record);
/// Writes run_<method>_<hash>.json into dir (created if needed);
/// returns the file path.
std::string write_run_record(const RunRecord& record, const std::string& dir);

enum class SweepAxis { kAlpha, kGamma, kTopN };
SweepAxis sweep_axis_from_name(const std::string& name);  // alpha | gamma | n_pos
std::string sweep_axis_name(SweepAxis axis);

/// One run per value on a shared seed list. Values for the n_pos axis
/// must be positive integers.
std::vector<RunRecord> run_sweep(const ExperimentConfig& config, SweepAxis axis,
                                 const std::vector<double>& values);

/// Sweep aggregate, one row per value: value,seeds_ok,ap_mean,ap_std,ap50,ap75.
std::string sweep_csv(SweepAxis axis, const std::vector<double>& values,
                      const std::vector<RunRecord>& records);

/// Summarize every run record found in run_dir: a method comparison
/// table, per-method confidence/IoU statistics and PR curve samples.
/// Files are written next to the records; the summary text is returned.
/// Throws when the directory holds no records.
std::string write_report(const std::string& run_dir);

/// Assignment statistics over externally supplied annotation scenes
/// (hard-threshold label counts against the cleanliness candidate set).
std::string assignment_audit(const std::vector<Scene>& scenes, const ExperimentConfig& config);

/// Condensed oracle/property suite behind the `check` subcommand.
/// Prints one line per check; returns the number of failures.
int run_selfcheck(std::ostream& out);

}  // namespace na
