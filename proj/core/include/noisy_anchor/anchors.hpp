// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <cstddef>
#include <vector>

#include "noisy_anchor/geometry.hpp"

namespace na {

/// One pyramid level: grid stride and base anchor size, both in pixels.
struct AnchorLevel {
    double stride = 8.0;
    double base_size = 8.0;
};

/// Anchor pyramid configuration. Anchors are centered on grid cells of
/// each level; partial cells at the image border still emit anchors and
/// boxes are not clipped to the image.
struct AnchorConfig {
    // Base sizes of 2x stride put anchor areas on the object size range
    // the default generator samples from.
    std::vector<AnchorLevel> levels = {{8.0, 16.0}, {16.0, 32.0}};
    std::vector<double> aspect_ratios = {0.5, 1.0, 2.0};
    std::vector<double> scale_octaves = {1.0, 1.2599210498948732, 1.5874010519681994};
    double image_width = 128.0;
    double image_height = 128.0;
};

/// Ordered anchor list. Ordering is deterministic: level-major, then
/// row-major over grid cells, then ratio-major, then octave-major.
struct AnchorSet {
    std::vector<Box> boxes;
    std::vector<int> level_of;

    std::size_t size() const { return boxes.size(); }
};

/// Number of anchors generate() will produce for a config:
/// sum over levels of ceil(W/stride) * ceil(H/stride) * |ratios| * |octaves|.
std::size_t anchor_count(const AnchorConfig& config);

/// Tile anchors over the image. Width/height per anchor follow the
/// area-preserving convention w = s*sqrt(ratio), h = s/sqrt(ratio) with
/// s = base_size * octave, so every anchor has area s^2 regardless of
/// ratio. Throws std::invalid_argument on an empty level list or any
/// non-positive stride, size, ratio or octave.
AnchorSet generate(const AnchorConfig& config);

}  // namespace na
