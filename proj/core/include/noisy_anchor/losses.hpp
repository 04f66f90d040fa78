// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <utility>
#include <vector>

#include "noisy_anchor/assignment.hpp"
#include "noisy_anchor/geometry.hpp"
#include "noisy_anchor/matrix.hpp"

namespace na {

/// Focal loss weighting parameters.
struct FocalParams {
    double alpha = 0.25;
    double gamma = 2.0;

    void validate() const;
};

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before any
/// logarithm.
inline constexpr double kProbClamp = 1e-7;

/// Weighted binary cross entropy -t*w_p*log(p) - (1-t)*w_n*log(1-p).
/// t may be fractional (a soft label).
double weighted_bce(double p, double t, double w_p, double w_n);

/// Focal modulating weights (w_p, w_n) = (alpha*(1-p)^gamma, (1-alpha)*p^gamma).
/// Both are treated as constants under differentiation.
std::pair<double, double> focal_weights(double p, const FocalParams& fp);

/// Smooth L1: 0.5*x^2/beta for |x| < beta, |x| - 0.5*beta otherwise.
double smooth_l1(double x, double beta);
/// Its derivative: x/beta inside the quadratic zone, sign(x) outside.
double smooth_l1_grad(double x, double beta);

/// Classification loss with gradients. probs is anchors x classes and
/// must equal sigmoid(logits) elementwise; grad_logits is the exact
/// derivative with respect to those pre-sigmoid logits, holding the
/// focal weights, soft labels and re-weight factors constant.
struct ClassificationLoss {
    double loss = 0.0;
    MatrixD grad_logits;
    std::vector<double> per_anchor;  // each anchor's contribution, pre-normalizer
};

/// Sum over (anchor, class) cells of r-weighted focal BCE, normalized by
/// the positive count (clamped below at 1). A positive anchor's matched
/// class takes its soft label as target with weight r; every other cell
/// is a weight-1 negative with target 0. Ignored anchors contribute
/// nothing. Throws on shape mismatch or non-finite probabilities.
ClassificationLoss classification_loss(const MatrixD& probs, const Assignment& assignment,
                                       const FocalParams& fp);

/// Regression loss with gradients: r-weighted smooth L1 summed over the
/// four delta components of each positive anchor, normalized by the
/// positive count (clamped below at 1). Targets are read only at
/// positive anchors.
struct RegressionLoss {
    double loss = 0.0;
    std::vector<BoxDelta> grad_deltas;
    std::vector<double> per_anchor;
};

RegressionLoss regression_loss(const std::vector<BoxDelta>& pred,
                               const std::vector<BoxDelta>& target,
                               const Assignment& assignment, double beta);

/// Bundle returned by one training evaluation.
struct LossReport {
    double cls_loss = 0.0;
    double reg_loss = 0.0;
    double total() const { return cls_loss + reg_loss; }
    MatrixD grad_logits;
    std::vector<BoxDelta> grad_deltas;
    std::vector<double> anchor_cls_loss;
    std::vector<double> anchor_reg_loss;
};

}  // namespace na
