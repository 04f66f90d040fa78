// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include "noisy_anchor/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace na {

double iou(const Box& a, const Box& b) {
    const double ix1 = std::max(a.x1, b.x1);
    const double iy1 = std::max(a.y1, b.y1);
    const double ix2 = std::min(a.x2, b.x2);
    const double iy2 = std::min(a.y2, b.y2);

    const double iw = ix2 - ix1;
    const double ih = iy2 - iy1;
    if (iw <= 0.0 || ih <= 0.0) return 0.0;

    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

MatrixD iou_matrix(const std::vector<Box>& anchors, const std::vector<Box>& gts) {
    MatrixD m(anchors.size(), gts.size());
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        for (std::size_t j = 0; j < gts.size(); ++j) {
            m(i, j) = iou(anchors[i], gts[j]);
        }
    }
    return m;
}

namespace {

void require_positive_anchor(const Box& anchor) {
    if (!(anchor.width() > 0.0) || !(anchor.height() > 0.0)) {
        throw std::invalid_argument("anchor must have strictly positive width and height");
    }
}

}  // namespace

BoxDelta encode(const Box& anchor, const Box& target) {
    require_positive_anchor(anchor);
    const double aw = anchor.width();
    const double ah = anchor.height();
    BoxDelta d;
    d.dx = (target.center_x() - anchor.center_x()) / aw;
    d.dy = (target.center_y() - anchor.center_y()) / ah;
    d.dw = std::log(target.width() / aw);
    d.dh = std::log(target.height() / ah);
    return d;
}

Box decode(const Box& anchor, const BoxDelta& delta) {
    require_positive_anchor(anchor);
    const double aw = anchor.width();
    const double ah = anchor.height();

    const double dw = std::min(delta.dw, kDeltaClampLog);
    const double dh = std::min(delta.dh, kDeltaClampLog);

    // Corner-anchored form. The size change is expressed through
    // expm1, which is exactly 0 at a zero delta, so decode(a, {0,0,0,0})
    // reproduces `a` bitwise instead of within rounding error.
    const double shift_x = delta.dx * aw;
    const double shift_y = delta.dy * ah;
    const double grow_w = aw * std::expm1(dw);  // new_w - old_w
    const double grow_h = ah * std::expm1(dh);

    Box out;
    out.x1 = anchor.x1 + shift_x - 0.5 * grow_w;
    out.y1 = anchor.y1 + shift_y - 0.5 * grow_h;
    out.x2 = anchor.x2 + shift_x + 0.5 * grow_w;
    out.y2 = anchor.y2 + shift_y + 0.5 * grow_h;
    return out;
}

Box clip_box(const Box& b, double w, double h) {
    Box out;
    out.x1 = std::clamp(b.x1, 0.0, w);
    out.y1 = std::clamp(b.y1, 0.0, h);
    out.x2 = std::clamp(b.x2, 0.0, w);
    out.y2 = std::clamp(b.y2, 0.0, h);
    return out;
}

}  // namespace na
