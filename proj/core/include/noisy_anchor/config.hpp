// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "noisy_anchor/anchors.hpp"
#include "noisy_anchor/assignment.hpp"
#include "noisy_anchor/losses.hpp"
#include "noisy_anchor/synthdata.hpp"

namespace na {

/// Configuration error carrying the file/line (or environment variable)
/// the problem was found at.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Full experiment description. Serialized as a line-oriented
/// `key = value` file; see config_keys() for the schema. Unknown keys
/// are rejected by name, malformed values by line.
struct ExperimentConfig {
    int schema_version = 1;

    AnchorConfig anchors;
    AssignParams assign;
    FocalParams focal;
    double smooth_l1_beta = 1.0 / 9.0;
    GenConfig gen;

    int train_iterations = 600;
    int batch_size = 8;
    double learning_rate = 0.05;
    std::vector<int> lr_milestones;
    double lr_decay = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    int hidden_dim = 0;
    int loss_sample_every = 25;

    double eval_nms_iou = 0.5;
    double eval_score_floor = 0.05;
    int eval_pre_nms_topk = 300;
    int eval_max_detections = 100;
    double eval_top_fraction = 0.02;

    MethodFlags method;

    std::vector<int> seeds = {1, 2, 3, 4, 5};
    std::string output_dir = "out";
    int workers = 1;

    void validate() const;

    /// "baseline", "sl_only", "sr_only" or "sl_sr", from the method flags.
    std::string method_name() const;
};

/// Parse config text. `source` names the file for error messages.
/// Does not apply environment overrides.
ExperimentConfig parse_config_text(const std::string& text, const std::string& source);

/// Canonical serialization: fixed key order, round-trip exact floats.
/// parse(serialize(c)) reproduces c, and serializing again is a fixed
/// point.
std::string serialize_config(const ExperimentConfig& config);

/// Canonical serialization minus the execution-site keys (run.workers,
/// run.output_dir), which cannot change results. This is the text the
/// config hash covers, so reruns of one experiment match regardless of
/// where or how parallel they ran.
std::string experiment_text(const ExperimentConfig& config);

/// Overrides of the form NA_<KEY>=value with '.' mapped to '_' and
/// uppercased (assign.alpha -> NA_ASSIGN_ALPHA), applied on top of the
/// parsed file.
void apply_env_overrides(ExperimentConfig& config);

/// Read a config file, apply environment overrides, validate.
ExperimentConfig load_config(const std::string& path);

/// FNV-1a 64 over the canonical serialization; stable across platforms
/// for identical config content.
std::uint64_t config_hash(const ExperimentConfig& config);
std::string config_hash_hex(const ExperimentConfig& config);

/// All recognized keys in canonical order (for documentation and the
/// env-override scan).
std::vector<std::string> config_keys();

}  // namespace na
