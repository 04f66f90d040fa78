// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include "noisy_anchor/anchors.hpp"

#include <cmath>
#include <stdexcept>

namespace na {

namespace {

std::size_t cells_along(double extent, double stride) {
    if (extent <= 0.0) return 0;
    return static_cast<std::size_t>(std::ceil(extent / stride));
}

void validate(const AnchorConfig& config) {
    if (config.levels.empty()) throw std::invalid_argument("anchor config needs at least one level");
    for (const auto& lv : config.levels) {
        if (!(lv.stride > 0.0) || !(lv.base_size > 0.0)) {
            throw std::invalid_argument("anchor strides and base sizes must be positive");
        }
    }
    if (config.aspect_ratios.empty() || config.scale_octaves.empty()) {
        throw std::invalid_argument("anchor config needs at least one ratio and one octave");
    }
    for (double r : config.aspect_ratios) {
        if (!(r > 0.0)) throw std::invalid_argument("aspect ratios must be positive");
    }
    for (double o : config.scale_octaves) {
        if (!(o > 0.0)) throw std::invalid_argument("scale octaves must be positive");
    }
    if (config.image_width < 0.0 || config.image_height < 0.0) {
        throw std::invalid_argument("image dimensions must be non-negative");
    }
}

}  // namespace

std::size_t anchor_count(const AnchorConfig& config) {
    std::size_t total = 0;
    for (const auto& lv : config.levels) {
        total += cells_along(config.image_width, lv.stride) *
                 cells_along(config.image_height, lv.stride) *
                 config.aspect_ratios.size() * config.scale_octaves.size();
    }
    return total;
}

AnchorSet generate(const AnchorConfig& config) {
    validate(config);

    AnchorSet set;
    set.boxes.reserve(anchor_count(config));
    set.level_of.reserve(set.boxes.capacity());

    for (std::size_t level = 0; level < config.levels.size(); ++level) {
        const auto& lv = config.levels[level];
        const std::size_t nx = cells_along(config.image_width, lv.stride);
        const std::size_t ny = cells_along(config.image_height, lv.stride);

        for (std::size_t row = 0; row < ny; ++row) {
            for (std::size_t col = 0; col < nx; ++col) {
                const double cx = (static_cast<double>(col) + 0.5) * lv.stride;
                const double cy = (static_cast<double>(row) + 0.5) * lv.stride;

                for (double ratio : config.aspect_ratios) {
                    const double root = std::sqrt(ratio);
                    for (double octave : config.scale_octaves) {
                        const double s = lv.base_size * octave;
                        const double w = s * root;
                        const double h = s / root;
                        set.boxes.push_back(Box{cx - 0.5 * w, cy - 0.5 * h,
                                                cx + 0.5 * w, cy + 0.5 * h});
                        set.level_of.push_back(static_cast<int>(level));
                    }
                }
            }
        }
    }
    return set;
}

}  // namespace na
