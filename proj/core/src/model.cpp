// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include "noisy_anchor/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "noisy_anchor/prng.hpp"

namespace na {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_shapes(const HeadParams& p) {
    const auto& c = p.cfg;
    if (c.feature_dim < 1 || c.num_classes < 1 || c.hidden_dim < 0) {
        throw std::invalid_argument("invalid head configuration");
    }
    const std::size_t wh = static_cast<std::size_t>(c.feature_dim) *
                           static_cast<std::size_t>(std::max(c.hidden_dim, 0));
    const std::size_t wo =
        static_cast<std::size_t>(c.inner_dim()) * static_cast<std::size_t>(c.out_dim());
    if (p.w_hidden.size() != wh || p.b_hidden.size() != static_cast<std::size_t>(c.hidden_dim) ||
        p.w_out.size() != wo || p.b_out.size() != static_cast<std::size_t>(c.out_dim())) {
        throw std::invalid_argument("head parameter blocks do not match the configuration");
    }
}

}  // namespace

HeadParams HeadParams::init(const HeadConfig& cfg, std::uint64_t seed) {
    if (cfg.feature_dim < 1 || cfg.num_classes < 1 || cfg.hidden_dim < 0) {
        throw std::invalid_argument("invalid head configuration");
    }
    if (!(cfg.prior_prob > 0.0) || !(cfg.prior_prob < 1.0)) {
        throw std::invalid_argument("prior_prob must be in (0, 1)");
    }

    SplitMix64 rng(seed);
    HeadParams p;
    p.cfg = cfg;
    const int inner = cfg.inner_dim();
    const int out = cfg.out_dim();

    if (cfg.hidden_dim > 0) {
        p.w_hidden.resize(static_cast<std::size_t>(cfg.feature_dim) * cfg.hidden_dim);
        // Fan-in scaled so tanh activations start in their linear zone.
        const double sigma_h = 1.0 / std::sqrt(static_cast<double>(cfg.feature_dim));
        for (double& w : p.w_hidden) w = sigma_h * rng.normal();
        p.b_hidden.assign(static_cast<std::size_t>(cfg.hidden_dim), 0.0);
    }

    p.w_out.assign(static_cast<std::size_t>(inner) * out, 0.0);
    for (std::size_t d = 0; d < static_cast<std::size_t>(inner); ++d) {
        for (int k = 0; k < cfg.num_classes; ++k) {
            p.w_out[d * static_cast<std::size_t>(out) + static_cast<std::size_t>(k)] =
                cfg.init_sigma * rng.normal();
        }
        // Regression columns stay zero.
    }

    p.b_out.assign(static_cast<std::size_t>(out), 0.0);
    const double prior_bias = -std::log((1.0 - cfg.prior_prob) / cfg.prior_prob);
    for (int k = 0; k < cfg.num_classes; ++k) p.b_out[static_cast<std::size_t>(k)] = prior_bias;

    return p;
}

std::size_t HeadParams::parameter_count() const {
    return w_hidden.size() + b_hidden.size() + w_out.size() + b_out.size();
}

ForwardResult forward(const HeadParams& params, const MatrixD& features) {
    check_shapes(params);
    const auto& cfg = params.cfg;
    if (features.cols != static_cast<std::size_t>(cfg.feature_dim)) {
        throw std::invalid_argument("feature dimension does not match the head");
    }

    const std::size_t n = features.rows;
    const std::size_t out = static_cast<std::size_t>(cfg.out_dim());
    const std::size_t classes = static_cast<std::size_t>(cfg.num_classes);

    ForwardResult res;
    const MatrixD* act = &features;

    if (cfg.hidden_dim > 0) {
        const std::size_t hd = static_cast<std::size_t>(cfg.hidden_dim);
        res.hidden = MatrixD(n, hd);
        for (std::size_t i = 0; i < n; ++i) {
            const double* x = features.row(i);
            double* h = res.hidden.row(i);
            for (std::size_t j = 0; j < hd; ++j) {
                double z = params.b_hidden[j];
                for (std::size_t f = 0; f < features.cols; ++f) {
                    z += x[f] * params.w_hidden[f * hd + j];
                }
                h[j] = std::tanh(z);
            }
        }
        act = &res.hidden;
    }

    res.logits = MatrixD(n, classes);
    res.probs = MatrixD(n, classes);
    res.deltas.assign(n, BoxDelta{});

    const std::size_t inner = act->cols;
    for (std::size_t i = 0; i < n; ++i) {
        const double* a = act->row(i);
        double z[8];  // out_dim is small; avoid per-anchor allocation
        std::vector<double> zbig;
        double* zp = z;
        if (out > 8) {
            zbig.assign(out, 0.0);
            zp = zbig.data();
        }
        for (std::size_t k = 0; k < out; ++k) {
            double v = params.b_out[k];
            for (std::size_t d = 0; d < inner; ++d) v += a[d] * params.w_out[d * out + k];
            zp[k] = v;
        }
        for (std::size_t k = 0; k < classes; ++k) {
            res.logits(i, k) = zp[k];
            res.probs(i, k) = sigmoid(zp[k]);
        }
        res.deltas[i] = BoxDelta{zp[classes], zp[classes + 1], zp[classes + 2], zp[classes + 3]};
    }
    return res;
}

void ParamGrads::accumulate(const ParamGrads& other, double s) {
    auto add = [s](std::vector<double>& dst, const std::vector<double>& src) {
        if (dst.empty()) dst.assign(src.size(), 0.0);
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] += s * src[i];
    };
    add(w_hidden, other.w_hidden);
    add(b_hidden, other.b_hidden);
    add(w_out, other.w_out);
    add(b_out, other.b_out);
}

void ParamGrads::scale(double s) {
    for (auto* v : {&w_hidden, &b_hidden, &w_out, &b_out}) {
        for (double& x : *v) x *= s;
    }
}

ParamGrads backward(const HeadParams& params, const MatrixD& features, const ForwardResult& fwd,
                    const MatrixD& grad_logits, const std::vector<BoxDelta>& grad_deltas) {
    check_shapes(params);
    const auto& cfg = params.cfg;
    const std::size_t n = features.rows;
    const std::size_t out = static_cast<std::size_t>(cfg.out_dim());
    const std::size_t classes = static_cast<std::size_t>(cfg.num_classes);
    if (grad_logits.rows != n || grad_logits.cols != classes || grad_deltas.size() != n) {
        throw std::invalid_argument("gradient shapes do not match the forward pass");
    }

    ParamGrads g;
    g.w_hidden.assign(params.w_hidden.size(), 0.0);
    g.b_hidden.assign(params.b_hidden.size(), 0.0);
    g.w_out.assign(params.w_out.size(), 0.0);
    g.b_out.assign(params.b_out.size(), 0.0);

    const bool has_hidden = cfg.hidden_dim > 0;
    const MatrixD& act = has_hidden ? fwd.hidden : features;
    const std::size_t inner = act.cols;

    std::vector<double> dz(out);
    std::vector<double> dact(has_hidden ? inner : 0);

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < classes; ++k) dz[k] = grad_logits(i, k);
        dz[classes] = grad_deltas[i].dx;
        dz[classes + 1] = grad_deltas[i].dy;
        dz[classes + 2] = grad_deltas[i].dw;
        dz[classes + 3] = grad_deltas[i].dh;

        const double* a = act.row(i);
        for (std::size_t d = 0; d < inner; ++d) {
            const double av = a[d];
            if (av != 0.0) {
                for (std::size_t k = 0; k < out; ++k) g.w_out[d * out + k] += av * dz[k];
            }
        }
        for (std::size_t k = 0; k < out; ++k) g.b_out[k] += dz[k];

        if (has_hidden) {
            const double* x = features.row(i);
            for (std::size_t d = 0; d < inner; ++d) {
                double s = 0.0;
                for (std::size_t k = 0; k < out; ++k) s += params.w_out[d * out + k] * dz[k];
                dact[d] = s * (1.0 - a[d] * a[d]);  // through tanh
            }
            for (std::size_t f = 0; f < features.cols; ++f) {
                const double xv = x[f];
                if (xv != 0.0) {
                    for (std::size_t d = 0; d < inner; ++d) {
                        g.w_hidden[f * inner + d] += xv * dact[d];
                    }
                }
            }
            for (std::size_t d = 0; d < inner; ++d) g.b_hidden[d] += dact[d];
        }
    }
    return g;
}

SceneEval evaluate_scene(const HeadParams& params, const Scene& scene, const AnchorSet& anchors,
                         const TrainHyper& hp) {
    SceneEval ev;
    ev.fwd = forward(params, scene.features);

    std::vector<Box> gt_boxes;
    std::vector<int> gt_classes;
    gt_boxes.reserve(scene.gts.size());
    gt_classes.reserve(scene.gts.size());
    for (const auto& g : scene.gts) {
        gt_boxes.push_back(g.box);
        gt_classes.push_back(g.class_id);
    }

    ev.assignment = assign_supervision(anchors, gt_boxes, gt_classes, ev.fwd.probs, ev.fwd.deltas,
                                       hp.assign, hp.method);

    std::vector<BoxDelta> targets(anchors.size());
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        if (ev.assignment.role[i] == AnchorRole::kPositive) {
            targets[i] =
                encode(anchors.boxes[i], gt_boxes[static_cast<std::size_t>(ev.assignment.matched_gt[i])]);
        }
    }

    const ClassificationLoss cls = classification_loss(ev.fwd.probs, ev.assignment, hp.focal);
    const RegressionLoss reg = regression_loss(ev.fwd.deltas, targets, ev.assignment,
                                               hp.smooth_l1_beta);

    ev.losses.cls_loss = cls.loss;
    ev.losses.reg_loss = reg.loss;
    ev.losses.grad_logits = cls.grad_logits;
    ev.losses.grad_deltas = reg.grad_deltas;
    ev.losses.anchor_cls_loss = cls.per_anchor;
    ev.losses.anchor_reg_loss = reg.per_anchor;

    ev.grads = backward(params, scene.features, ev.fwd, cls.grad_logits, reg.grad_deltas);
    return ev;
}

TrainState TrainState::init(const HeadConfig& cfg, const SgdConfig& opt, std::uint64_t seed) {
    TrainState s;
    s.params = HeadParams::init(cfg, seed);
    s.opt = opt;
    s.velocity.w_hidden.assign(s.params.w_hidden.size(), 0.0);
    s.velocity.b_hidden.assign(s.params.b_hidden.size(), 0.0);
    s.velocity.w_out.assign(s.params.w_out.size(), 0.0);
    s.velocity.b_out.assign(s.params.b_out.size(), 0.0);
    return s;
}

double TrainState::current_lr() const {
    double lr = opt.learning_rate;
    for (int m : opt.milestones) {
        if (iteration >= m) lr *= opt.decay;
    }
    return lr;
}

void apply_update(TrainState& state, const ParamGrads& grads) {
    const double lr = state.current_lr();
    if (lr == 0.0) return;  // evaluation mode: touch nothing

    auto step = [&](std::vector<double>& param, std::vector<double>& vel,
                    const std::vector<double>& grad) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double g = grad[i] + state.opt.weight_decay * param[i];
            vel[i] = state.opt.momentum * vel[i] + g;
            param[i] -= lr * vel[i];
        }
    };
    step(state.params.w_hidden, state.velocity.w_hidden, grads.w_hidden);
    step(state.params.b_hidden, state.velocity.b_hidden, grads.b_hidden);
    step(state.params.w_out, state.velocity.w_out, grads.w_out);
    step(state.params.b_out, state.velocity.b_out, grads.b_out);
    ++state.iteration;
}

LossReport train_step(TrainState& state, const Scene& scene, const AnchorSet& anchors,
                      const TrainHyper& hp) {
    SceneEval ev = evaluate_scene(state.params, scene, anchors, hp);
    apply_update(state, ev.grads);
    return std::move(ev.losses);
}

// ---------------------------------------------------------------------------
// Checkpoints.

namespace {

constexpr char kMagic[4] = {'N', 'A', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big,
              "mixed-endian platforms unsupported");

template <typename T>
void put(std::ofstream& f, T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto* p = reinterpret_cast<unsigned char*>(&v);
        std::reverse(p, p + sizeof(T));
    }
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
    T v;
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw std::runtime_error("checkpoint truncated");
    if constexpr (std::endian::native == std::endian::big) {
        auto* p = reinterpret_cast<unsigned char*>(&v);
        std::reverse(p, p + sizeof(T));
    }
    return v;
}

void put_block(std::ofstream& f, const std::vector<double>& v) {
    put<std::uint64_t>(f, v.size());
    for (double x : v) put<double>(f, x);
}

std::vector<double> get_block(std::ifstream& f) {
    const auto n = get<std::uint64_t>(f);
    std::vector<double> v(n);
    for (auto& x : v) x = get<double>(f);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainState& state) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    f.write(kMagic, 4);
    put<std::uint32_t>(f, kVersion);
    put<std::uint32_t>(f, static_cast<std::uint32_t>(state.params.cfg.feature_dim));
    put<std::uint32_t>(f, static_cast<std::uint32_t>(state.params.cfg.num_classes));
    put<std::uint32_t>(f, static_cast<std::uint32_t>(state.params.cfg.hidden_dim));
    put<std::uint32_t>(f, static_cast<std::uint32_t>(state.iteration));
    put<double>(f, state.params.cfg.prior_prob);
    put<double>(f, state.params.cfg.init_sigma);
    put_block(f, state.params.w_hidden);
    put_block(f, state.params.b_hidden);
    put_block(f, state.params.w_out);
    put_block(f, state.params.b_out);
    put_block(f, state.velocity.w_hidden);
    put_block(f, state.velocity.b_hidden);
    put_block(f, state.velocity.w_out);
    put_block(f, state.velocity.b_out);
    if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

TrainState load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("not a checkpoint file: " + path);
    }
    if (get<std::uint32_t>(f) != kVersion) throw std::runtime_error("unsupported checkpoint version");

    TrainState s;
    s.params.cfg.feature_dim = static_cast<int>(get<std::uint32_t>(f));
    s.params.cfg.num_classes = static_cast<int>(get<std::uint32_t>(f));
    s.params.cfg.hidden_dim = static_cast<int>(get<std::uint32_t>(f));
    s.iteration = static_cast<int>(get<std::uint32_t>(f));
    s.params.cfg.prior_prob = get<double>(f);
    s.params.cfg.init_sigma = get<double>(f);
    s.params.w_hidden = get_block(f);
    s.params.b_hidden = get_block(f);
    s.params.w_out = get_block(f);
    s.params.b_out = get_block(f);
    s.velocity.w_hidden = get_block(f);
    s.velocity.b_hidden = get_block(f);
    s.velocity.w_out = get_block(f);
    s.velocity.b_out = get_block(f);
    check_shapes(s.params);
    return s;
}

}  // namespace na
