// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "noisy_anchor/anchors.hpp"
#include "noisy_anchor/geometry.hpp"
#include "noisy_anchor/matrix.hpp"

namespace na {

struct GtObject {
    Box box;
    int class_id = 0;
};

/// One synthetic image: ground-truth objects, unannotated distractor
/// clutter, and the per-anchor feature block the head trains on.
/// Everything is a pure function of (config, anchor set, seed).
struct Scene {
    double image_width = 0.0;
    double image_height = 0.0;
    std::vector<GtObject> gts;
    std::vector<GtObject> distractors;
    MatrixD features;  // anchors x feature_dim(num_classes)
    std::uint64_t seed = 0;
};

/// Scene generator configuration. Distractors are GT-like objects that
/// are never annotated; anchors covering them see object-like features
/// but receive background-side supervision, which is the controlled
/// label-noise mechanism this testbed exists to exercise.
struct GenConfig {
    double image_width = 128.0;
    double image_height = 128.0;
    int train_scenes = 500;
    int eval_scenes = 200;
    int objects_min = 1;
    int objects_max = 4;
    int num_classes = 3;
    /// Object scale is sqrt(area); aspect ratios are log-uniform in
    /// [1/8, 8], wider than the anchor ratio set on purpose.
    double size_min = 16.0;
    double size_max = 48.0;
    /// Maximum pairwise IoU tolerated between placed ground-truth boxes.
    double overlap_max = 0.3;
    double feature_noise_sigma = 0.1;
    /// Per ground-truth chance of spawning one distractor.
    double distractor_rate = 0.3;
    int max_place_retries = 100;

    void validate() const;
};

/// Feature layout per anchor: per-class max IoU against ground truths,
/// per-class max IoU against distractors, center offset of the
/// best-overlapping object normalized by anchor size, and log size
/// ratios of that object. 2 * num_classes + 4 total.
int feature_dim(int num_classes);

/// Generate one scene. Object boxes are rejection-sampled against the
/// overlap constraint; throws std::runtime_error naming the constraint
/// if placement keeps failing.
Scene generate_scene(const GenConfig& config, const AnchorSet& anchors, std::uint64_t seed);

/// Scenes seeded base_seed + i for i in [0, n).
std::vector<Scene> generate_split(const GenConfig& config, const AnchorSet& anchors,
                                  std::uint64_t base_seed, int n);

/// Text serialization: header with the generator config, then one record
/// per scene (dims, seed, ground truths). Features are not stored; they
/// are regenerated on load. Floats print round-trip exact.
std::string serialize_scenes(const GenConfig& config, const std::vector<Scene>& scenes);

struct SceneFile {
    GenConfig config;
    std::vector<Scene> scenes;
};

/// Parse a serialized scene set and regenerate each scene from its seed.
/// The regenerated ground truths must match the stored ones exactly;
/// a mismatch (config drift, file edits) raises std::runtime_error.
SceneFile parse_scenes(const std::string& text, const AnchorSet& anchors);

void write_scenes(const std::string& path, const GenConfig& config,
                  const std::vector<Scene>& scenes);
SceneFile load_scenes(const std::string& path, const AnchorSet& anchors);

/// Minimal COCO-style ingestion (images + annotations with bbox
/// [x, y, w, h] and category_id), for assignment-statistics audits only.
/// The returned scenes carry ground truths but no features.
std::vector<Scene> scenes_from_coco_json(const std::string& path);

}  // namespace na
