// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include "noisy_anchor/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace na {

void FocalParams::validate() const {
    if (!(alpha > 0.0) || !(alpha < 1.0)) throw std::invalid_argument("focal.alpha must be in (0, 1)");
    if (gamma < 0.0) throw std::invalid_argument("focal.gamma must be >= 0");
}

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

}  // namespace

double weighted_bce(double p, double t, double w_p, double w_n) {
    const double q = clamp_prob(p);
    return -t * w_p * std::log(q) - (1.0 - t) * w_n * std::log1p(-q);
}

std::pair<double, double> focal_weights(double p, const FocalParams& fp) {
    const double q = clamp_prob(p);
    return {fp.alpha * std::pow(1.0 - q, fp.gamma), (1.0 - fp.alpha) * std::pow(q, fp.gamma)};
}

double smooth_l1(double x, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("smooth_l1 beta must be positive");
    const double ax = std::fabs(x);
    if (ax < beta) return 0.5 * x * x / beta;
    return ax - 0.5 * beta;
}

double smooth_l1_grad(double x, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("smooth_l1 beta must be positive");
    if (std::fabs(x) < beta) return x / beta;
    return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
}

ClassificationLoss classification_loss(const MatrixD& probs, const Assignment& assignment,
                                       const FocalParams& fp) {
    fp.validate();
    const std::size_t n = assignment.size();
    if (probs.rows != n) throw std::invalid_argument("probs rows must match the assignment");
    for (double v : probs.data) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite probability");
    }

    const std::size_t classes = probs.cols;
    const double norm = 1.0 / static_cast<double>(std::max<std::size_t>(assignment.positive_count(), 1));

    ClassificationLoss out;
    out.grad_logits = MatrixD(n, classes);
    out.per_anchor.assign(n, 0.0);

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (assignment.role[i] == AnchorRole::kIgnored) continue;
        const bool positive = assignment.role[i] == AnchorRole::kPositive;
        const std::size_t matched =
            positive ? static_cast<std::size_t>(assignment.matched_class[i]) : classes;

        double anchor_sum = 0.0;
        for (std::size_t k = 0; k < classes; ++k) {
            const double q = clamp_prob(probs(i, k));
            const auto [w_p, w_n] = focal_weights(q, fp);
            const bool matched_cell = positive && k == matched;
            const double t = matched_cell ? assignment.soft_label[i] : 0.0;
            const double r = matched_cell ? assignment.weight[i] : 1.0;

            anchor_sum += r * (-t * w_p * std::log(q) - (1.0 - t) * w_n * std::log1p(-q));
            out.grad_logits(i, k) = norm * r * (-t * w_p * (1.0 - q) + (1.0 - t) * w_n * q);
        }
        out.per_anchor[i] = anchor_sum;
        total += anchor_sum;
    }
    out.loss = total * norm;
    return out;
}

RegressionLoss regression_loss(const std::vector<BoxDelta>& pred,
                               const std::vector<BoxDelta>& target,
                               const Assignment& assignment, double beta) {
    const std::size_t n = assignment.size();
    if (pred.size() != n || target.size() != n) {
        throw std::invalid_argument("regression loss inputs must align with the assignment");
    }

    const double norm = 1.0 / static_cast<double>(std::max<std::size_t>(assignment.positive_count(), 1));

    RegressionLoss out;
    out.grad_deltas.assign(n, BoxDelta{});
    out.per_anchor.assign(n, 0.0);

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (assignment.role[i] != AnchorRole::kPositive) continue;
        const double r = assignment.weight[i];

        const double diffs[4] = {pred[i].dx - target[i].dx, pred[i].dy - target[i].dy,
                                 pred[i].dw - target[i].dw, pred[i].dh - target[i].dh};
        double anchor_sum = 0.0;
        double grads[4];
        for (int k = 0; k < 4; ++k) {
            anchor_sum += smooth_l1(diffs[k], beta);
            grads[k] = norm * r * smooth_l1_grad(diffs[k], beta);
        }
        out.grad_deltas[i] = BoxDelta{grads[0], grads[1], grads[2], grads[3]};
        out.per_anchor[i] = r * anchor_sum;
        total += r * anchor_sum;
    }
    out.loss = total * norm;
    return out;
}

}  // namespace na
