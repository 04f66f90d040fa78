// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <vector>

#include "noisy_anchor/matrix.hpp"

namespace na {

/// Axis-aligned box in continuous image coordinates, corner form.
/// Invariant: x1 <= x2 and y1 <= y2. Zero-area (degenerate) boxes are
/// legal values; they simply have no interior.
struct Box {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
    double center_x() const { return 0.5 * (x1 + x2); }
    double center_y() const { return 0.5 * (y1 + y2); }

    bool valid() const { return x1 <= x2 && y1 <= y2; }

    bool operator==(const Box&) const = default;
};

/// Box regression offsets: center shift normalized by anchor size plus
/// log-scale size ratios.
struct BoxDelta {
    double dx = 0.0;
    double dy = 0.0;
    double dw = 0.0;
    double dh = 0.0;

    bool operator==(const BoxDelta&) const = default;
};

/// Decode clamps dw/dh at this value before exponentiation so a wild
/// regression output cannot overflow the box size (exp bound 1000/16).
inline constexpr double kDeltaClampLog = 4.135166556742356;  // ln(1000/16)

/// Intersection over union of two boxes. Degenerate boxes are allowed;
/// when the union has zero area the result is 0.
double iou(const Box& a, const Box& b);

/// Pairwise IoU, entry (i, j) = iou(anchors[i], gts[j]). Either list may
/// be empty, producing a matrix with zero rows or columns.
MatrixD iou_matrix(const std::vector<Box>& anchors, const std::vector<Box>& gts);

/// Offsets that map `anchor` onto `target`. The anchor must have strictly
/// positive width and height; throws std::invalid_argument otherwise.
BoxDelta encode(const Box& anchor, const Box& target);

/// Apply regression offsets to an anchor. Exact at zero delta: the
/// returned box is bit-identical to the anchor, which the cold-start
/// identity of the assignment stage relies on. Throws on degenerate
/// anchors.
Box decode(const Box& anchor, const BoxDelta& delta);

/// Clip a box to [0, w] x [0, h]. May produce a degenerate box.
Box clip_box(const Box& b, double w, double h);

}  // namespace na
