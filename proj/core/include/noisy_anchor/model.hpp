// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "noisy_anchor/assignment.hpp"
#include "noisy_anchor/losses.hpp"
#include "noisy_anchor/matrix.hpp"
#include "noisy_anchor/synthdata.hpp"

namespace na {

/// Detection head shape: a linear map from per-anchor features to
/// num_classes logits plus 4 regression deltas. hidden_dim > 0 inserts
/// one tanh layer for harder synthetic tasks; 0 keeps the head linear so
/// the manual backward pass stays trivially auditable.
struct HeadConfig {
    int feature_dim = 0;
    int num_classes = 1;
    int hidden_dim = 0;
    double prior_prob = 0.01;
    double init_sigma = 0.01;

    int out_dim() const { return num_classes + 4; }
    int inner_dim() const { return hidden_dim > 0 ? hidden_dim : feature_dim; }
};

/// Head parameters, flat row-major blocks. Output columns 0..C-1 are
/// class logits, C..C+3 the regression deltas.
struct HeadParams {
    HeadConfig cfg;
    std::vector<double> w_hidden;  // feature_dim x hidden_dim (empty when linear)
    std::vector<double> b_hidden;  // hidden_dim
    std::vector<double> w_out;     // inner_dim x out_dim
    std::vector<double> b_out;     // out_dim

    /// Seeded init: classification weights from N(0, init_sigma^2),
    /// classification bias at -log((1-pi)/pi) so initial probabilities
    /// sit at the prior, regression weights and bias exactly zero (which
    /// makes the first iteration's regressed boxes equal the anchors).
    static HeadParams init(const HeadConfig& cfg, std::uint64_t seed);

    std::size_t parameter_count() const;
};

/// Forward activations kept for the backward pass.
struct ForwardResult {
    MatrixD hidden;  // post-tanh, empty when linear
    MatrixD logits;  // anchors x num_classes
    MatrixD probs;   // sigmoid(logits)
    std::vector<BoxDelta> deltas;
};

/// probs = sigmoid(features * W_cls + b_cls), deltas = features * W_reg + b_reg.
/// Throws on a feature-dimension mismatch.
ForwardResult forward(const HeadParams& params, const MatrixD& features);

/// Gradient blocks aligned with HeadParams.
struct ParamGrads {
    std::vector<double> w_hidden, b_hidden, w_out, b_out;

    void accumulate(const ParamGrads& other, double scale);
    void scale(double s);
};

/// Backpropagate loss gradients (w.r.t. logits and deltas) through the
/// head to every parameter.
ParamGrads backward(const HeadParams& params, const MatrixD& features, const ForwardResult& fwd,
                    const MatrixD& grad_logits, const std::vector<BoxDelta>& grad_deltas);

/// Everything the loss side of a train step needs.
struct TrainHyper {
    AssignParams assign;
    FocalParams focal;
    MethodFlags method;
    double smooth_l1_beta = 1.0 / 9.0;
};

/// One scene's supervision, losses and parameter gradients at the
/// current parameters. Pure; used by both train_step and the batched
/// trainer.
struct SceneEval {
    Assignment assignment;
    ForwardResult fwd;
    LossReport losses;
    ParamGrads grads;
};

SceneEval evaluate_scene(const HeadParams& params, const Scene& scene, const AnchorSet& anchors,
                         const TrainHyper& hp);

/// SGD with momentum; learning rate decays by `decay` at each milestone
/// iteration.
struct SgdConfig {
    double learning_rate = 0.05;
    std::vector<int> milestones;
    double decay = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;
};

struct TrainState {
    HeadParams params;
    SgdConfig opt;
    int iteration = 0;
    ParamGrads velocity;  // same shapes as params

    static TrainState init(const HeadConfig& cfg, const SgdConfig& opt, std::uint64_t seed);
    double current_lr() const;
};

/// Apply one SGD-with-momentum update from averaged gradients. A zero
/// learning rate leaves the state untouched (evaluation mode).
void apply_update(TrainState& state, const ParamGrads& grads);

/// One full iteration on a single scene: forward, cleanliness (or
/// baseline) assignment, losses, backward, update. c and r are
/// recomputed from the current outputs and treated as constants of the
/// iteration. Deterministic given identical state and inputs.
LossReport train_step(TrainState& state, const Scene& scene, const AnchorSet& anchors,
                      const TrainHyper& hp);

/// Checkpoint I/O. Flat binary, little-endian; layout:
///   magic "NACK", u32 version (1),
///   u32 feature_dim, num_classes, hidden_dim, iteration,
///   f64 prior_prob, init_sigma,
///   then the w_hidden, b_hidden, w_out, b_out, velocity blocks in
///   declaration order, each as u64 count + that many f64 values.
void save_checkpoint(const std::string& path, const TrainState& state);
TrainState load_checkpoint(const std::string& path);

}  // namespace na
