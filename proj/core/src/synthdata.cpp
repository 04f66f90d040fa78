// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include "noisy_anchor/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "noisy_anchor/prng.hpp"

namespace na {

void GenConfig::validate() const {
    if (image_width <= 0.0 || image_height <= 0.0) {
        throw std::invalid_argument("gen: image dimensions must be positive");
    }
    if (train_scenes < 0 || eval_scenes < 0) {
        throw std::invalid_argument("gen: scene counts must be non-negative");
    }
    if (objects_min < 0 || objects_max < objects_min) {
        throw std::invalid_argument("gen: objects range must satisfy 0 <= min <= max");
    }
    if (num_classes < 1) throw std::invalid_argument("gen: num_classes must be >= 1");
    if (!(size_min > 0.0) || size_max < size_min) {
        throw std::invalid_argument("gen: size range must satisfy 0 < min <= max");
    }
    if (size_max > image_width || size_max > image_height) {
        throw std::invalid_argument("gen: size_max must fit inside the image");
    }
    if (overlap_max < 0.0 || overlap_max > 1.0) {
        throw std::invalid_argument("gen: overlap_max must be in [0, 1]");
    }
    if (distractor_rate < 0.0 || distractor_rate > 1.0) {
        throw std::invalid_argument("gen: distractor_rate must be in [0, 1]");
    }
    if (feature_noise_sigma < 0.0) throw std::invalid_argument("gen: sigma must be >= 0");
    if (max_place_retries < 1) throw std::invalid_argument("gen: max_place_retries must be >= 1");
}

int feature_dim(int num_classes) { return 2 * num_classes + 4; }

namespace {

// Objects are sized by sqrt-area in [size_min, size_max] with a
// log-uniform aspect ratio in [1/8, 8]. The aspect tail deliberately
// reaches past the anchor ratio set, so a minority of objects have no
// anchor above the hard foreground threshold; those are the objects the
// threshold rule starves.
constexpr double kAspectSpan = 8.0;

Box sample_box_anywhere(SplitMix64& rng, const GenConfig& cfg) {
    const double s = rng.uniform(cfg.size_min, cfg.size_max);
    const double aspect =
        std::exp(rng.uniform(-std::log(kAspectSpan), std::log(kAspectSpan)));
    const double root = std::sqrt(aspect);
    const double w = std::min(s * root, cfg.image_width);
    const double h = std::min(s / root, cfg.image_height);
    const double x1 = rng.uniform(0.0, cfg.image_width - w);
    const double y1 = rng.uniform(0.0, cfg.image_height - h);
    return Box{x1, y1, x1 + w, y1 + h};
}

std::vector<GtObject> place_objects(SplitMix64& rng, const GenConfig& cfg) {
    const int n = static_cast<int>(rng.uniform_int(cfg.objects_min, cfg.objects_max));
    std::vector<GtObject> objects;
    objects.reserve(static_cast<std::size_t>(n));

    for (int k = 0; k < n; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < cfg.max_place_retries; ++attempt) {
            const Box candidate = sample_box_anywhere(rng, cfg);
            double worst = 0.0;
            for (const auto& o : objects) worst = std::max(worst, iou(candidate, o.box));
            if (worst <= cfg.overlap_max) {
                const int cls = static_cast<int>(rng.uniform_int(0, cfg.num_classes - 1));
                objects.push_back(GtObject{candidate, cls});
                placed = true;
                break;
            }
        }
        if (!placed) {
            throw std::runtime_error(
                "scene placement failed: overlap_max=" + std::to_string(cfg.overlap_max) +
                " unsatisfiable after " + std::to_string(cfg.max_place_retries) + " retries");
        }
    }
    return objects;
}

std::vector<GtObject> place_distractors(SplitMix64& rng, const GenConfig& cfg,
                                        const std::vector<GtObject>& gts) {
    std::vector<GtObject> out;
    for (std::size_t k = 0; k < gts.size(); ++k) {
        if (rng.next_double() >= cfg.distractor_rate) continue;

        // Mostly occluder-style clutter that overlaps a real object with a
        // comparable footprint, so anchors over that object see the
        // distractor as their dominant content while still receiving the
        // object's supervision. The rest is free-standing clutter.
        const bool near = rng.next_double() < 0.8;
        double w, h, x1, y1;
        if (near) {
            const auto& host = gts[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(gts.size()) - 1))].box;
            w = std::clamp(host.width() * rng.uniform(0.7, 1.3), 4.0, cfg.image_width);
            h = std::clamp(host.height() * rng.uniform(0.7, 1.3), 4.0, cfg.image_height);
            const double cx = host.center_x() + rng.uniform(-0.45, 0.45) * host.width();
            const double cy = host.center_y() + rng.uniform(-0.45, 0.45) * host.height();
            x1 = std::clamp(cx - 0.5 * w, 0.0, cfg.image_width - w);
            y1 = std::clamp(cy - 0.5 * h, 0.0, cfg.image_height - h);
        } else {
            w = rng.uniform(cfg.size_min, cfg.size_max);
            h = rng.uniform(cfg.size_min, cfg.size_max);
            x1 = rng.uniform(0.0, cfg.image_width - w);
            y1 = rng.uniform(0.0, cfg.image_height - h);
        }
        const int cls = static_cast<int>(rng.uniform_int(0, cfg.num_classes - 1));
        out.push_back(GtObject{Box{x1, y1, x1 + w, y1 + h}, cls});
    }
    return out;
}

void fill_features(SplitMix64& rng, const GenConfig& cfg, const AnchorSet& anchors, Scene& scene) {
    const int c = cfg.num_classes;
    scene.features = MatrixD(anchors.size(), static_cast<std::size_t>(feature_dim(c)));

    for (std::size_t i = 0; i < anchors.size(); ++i) {
        const Box& a = anchors.boxes[i];
        double* row = scene.features.row(i);

        double best_iou = 0.0;
        const Box* best_box = nullptr;
        for (const auto& o : scene.gts) {
            const double v = iou(a, o.box);
            row[o.class_id] = std::max(row[o.class_id], v);
            if (v > best_iou) {
                best_iou = v;
                best_box = &o.box;
            }
        }
        for (const auto& o : scene.distractors) {
            const double v = iou(a, o.box);
            row[c + o.class_id] = std::max(row[c + o.class_id], v);
            if (v > best_iou) {
                best_iou = v;
                best_box = &o.box;
            }
        }

        // Content features point at whatever the anchor overlaps most,
        // annotated or not.
        if (best_box != nullptr) {
            row[2 * c + 0] = (best_box->center_x() - a.center_x()) / a.width();
            row[2 * c + 1] = (best_box->center_y() - a.center_y()) / a.height();
            row[2 * c + 2] = std::log(best_box->width() / a.width());
            row[2 * c + 3] = std::log(best_box->height() / a.height());
        }

        if (cfg.feature_noise_sigma > 0.0) {
            for (int k = 0; k < feature_dim(c); ++k) {
                row[k] += cfg.feature_noise_sigma * rng.normal();
            }
        }
    }
}

}  // namespace

Scene generate_scene(const GenConfig& config, const AnchorSet& anchors, std::uint64_t seed) {
    config.validate();

    SplitMix64 rng(seed);
    Scene scene;
    scene.image_width = config.image_width;
    scene.image_height = config.image_height;
    scene.seed = seed;
    scene.gts = place_objects(rng, config);
    scene.distractors = place_distractors(rng, config, scene.gts);
    fill_features(rng, config, anchors, scene);
    return scene;
}

std::vector<Scene> generate_split(const GenConfig& config, const AnchorSet& anchors,
                                  std::uint64_t base_seed, int n) {
    if (n < 0) throw std::invalid_argument("generate_split: n must be >= 0");
    std::vector<Scene> scenes;
    scenes.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        scenes.push_back(generate_scene(config, anchors, base_seed + static_cast<std::uint64_t>(i)));
    }
    return scenes;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string serialize_scenes(const GenConfig& config, const std::vector<Scene>& scenes) {
    std::ostringstream os;
    os << "# noisy-anchors scene set\n";
    os << "schema_version 1\n";
    os << "image_width " << fmt_double(config.image_width) << "\n";
    os << "image_height " << fmt_double(config.image_height) << "\n";
    os << "num_classes " << config.num_classes << "\n";
    os << "objects_min " << config.objects_min << "\n";
    os << "objects_max " << config.objects_max << "\n";
    os << "size_min " << fmt_double(config.size_min) << "\n";
    os << "size_max " << fmt_double(config.size_max) << "\n";
    os << "overlap_max " << fmt_double(config.overlap_max) << "\n";
    os << "feature_noise_sigma " << fmt_double(config.feature_noise_sigma) << "\n";
    os << "distractor_rate " << fmt_double(config.distractor_rate) << "\n";
    os << "max_place_retries " << config.max_place_retries << "\n";
    os << "scene_count " << scenes.size() << "\n";
    for (const auto& s : scenes) {
        os << "scene seed " << s.seed << " gts " << s.gts.size() << "\n";
        for (const auto& g : s.gts) {
            os << "gt " << g.class_id << " " << fmt_double(g.box.x1) << " " << fmt_double(g.box.y1)
               << " " << fmt_double(g.box.x2) << " " << fmt_double(g.box.y2) << "\n";
        }
    }
    return os.str();
}

namespace {

struct LineReader {
    std::istringstream in;
    std::string line;
    int number = 0;

    explicit LineReader(const std::string& text) : in(text) {}

    bool next() {
        while (std::getline(in, line)) {
            ++number;
            if (!line.empty() && line[0] != '#') return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw std::runtime_error("scene file line " + std::to_string(number) + ": " + what);
    }
};

}  // namespace

SceneFile parse_scenes(const std::string& text, const AnchorSet& anchors) {
    LineReader r(text);
    GenConfig cfg;
    std::size_t scene_count = 0;
    bool have_count = false;

    // Header: "key value" pairs until scene_count.
    while (!have_count) {
        if (!r.next()) r.fail("unexpected end of header");
        std::istringstream ls(r.line);
        std::string key;
        ls >> key;
        if (key == "schema_version") {
            int v;
            ls >> v;
            if (v != 1) r.fail("unsupported schema_version");
        } else if (key == "image_width") {
            ls >> cfg.image_width;
        } else if (key == "image_height") {
            ls >> cfg.image_height;
        } else if (key == "num_classes") {
            ls >> cfg.num_classes;
        } else if (key == "objects_min") {
            ls >> cfg.objects_min;
        } else if (key == "objects_max") {
            ls >> cfg.objects_max;
        } else if (key == "size_min") {
            ls >> cfg.size_min;
        } else if (key == "size_max") {
            ls >> cfg.size_max;
        } else if (key == "overlap_max") {
            ls >> cfg.overlap_max;
        } else if (key == "feature_noise_sigma") {
            ls >> cfg.feature_noise_sigma;
        } else if (key == "distractor_rate") {
            ls >> cfg.distractor_rate;
        } else if (key == "max_place_retries") {
            ls >> cfg.max_place_retries;
        } else if (key == "scene_count") {
            ls >> scene_count;
            have_count = true;
        } else {
            r.fail("unknown header key '" + key + "'");
        }
        if (ls.fail()) r.fail("malformed value for '" + key + "'");
    }

    SceneFile out;
    out.config = cfg;
    out.scenes.reserve(scene_count);

    for (std::size_t s = 0; s < scene_count; ++s) {
        if (!r.next()) r.fail("expected scene record");
        std::istringstream ls(r.line);
        std::string tag, seed_kw, gts_kw;
        std::uint64_t seed;
        std::size_t n_gts;
        ls >> tag >> seed_kw >> seed >> gts_kw >> n_gts;
        if (ls.fail() || tag != "scene" || seed_kw != "seed" || gts_kw != "gts") {
            r.fail("malformed scene record");
        }

        std::vector<GtObject> stored;
        stored.reserve(n_gts);
        for (std::size_t g = 0; g < n_gts; ++g) {
            if (!r.next()) r.fail("expected gt record");
            std::istringstream gl(r.line);
            std::string gt_tag;
            GtObject obj;
            gl >> gt_tag >> obj.class_id >> obj.box.x1 >> obj.box.y1 >> obj.box.x2 >> obj.box.y2;
            if (gl.fail() || gt_tag != "gt") r.fail("malformed gt record");
            stored.push_back(obj);
        }

        Scene scene = generate_scene(cfg, anchors, seed);
        if (scene.gts.size() != stored.size()) {
            r.fail("regenerated scene disagrees with stored ground truths (count)");
        }
        for (std::size_t g = 0; g < stored.size(); ++g) {
            if (scene.gts[g].class_id != stored[g].class_id || scene.gts[g].box != stored[g].box) {
                r.fail("regenerated scene disagrees with stored ground truths");
            }
        }
        out.scenes.push_back(std::move(scene));
    }
    return out;
}

void write_scenes(const std::string& path, const GenConfig& config,
                  const std::vector<Scene>& scenes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << serialize_scenes(config, scenes);
}

SceneFile load_scenes(const std::string& path, const AnchorSet& anchors) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open scene file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_scenes(buf.str(), anchors);
}

std::vector<Scene> scenes_from_coco_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open annotation file: " + path);

    nlohmann::json doc;
    try {
        f >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("annotation file is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.contains("images") || !doc.contains("annotations")) {
        throw std::runtime_error("annotation file needs 'images' and 'annotations' arrays");
    }

    std::map<std::int64_t, std::size_t> index_of;
    std::vector<Scene> scenes;
    for (const auto& img : doc["images"]) {
        Scene s;
        s.image_width = img.value("width", 0.0);
        s.image_height = img.value("height", 0.0);
        index_of[img.at("id").get<std::int64_t>()] = scenes.size();
        scenes.push_back(std::move(s));
    }
    for (const auto& ann : doc["annotations"]) {
        const auto it = index_of.find(ann.at("image_id").get<std::int64_t>());
        if (it == index_of.end()) {
            throw std::runtime_error("annotation references unknown image_id");
        }
        const auto& bb = ann.at("bbox");
        if (!bb.is_array() || bb.size() != 4) {
            throw std::runtime_error("annotation bbox must be [x, y, w, h]");
        }
        const double x = bb[0].get<double>();
        const double y = bb[1].get<double>();
        const double w = bb[2].get<double>();
        const double h = bb[3].get<double>();
        GtObject obj;
        obj.box = Box{x, y, x + w, y + h};
        obj.class_id = ann.at("category_id").get<int>();
        if (obj.class_id < 0) throw std::runtime_error("category_id must be non-negative");
        scenes[it->second].gts.push_back(obj);
    }
    return scenes;
}

}  // namespace na
