// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include "noisy_anchor/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace na {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(trim(cur));
    if (parts.size() == 1 && parts[0].empty()) parts.clear();
    return parts;
}

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + s + "'");
    }
    if (pos != s.size()) throw ConfigError("trailing junk after number '" + s + "'");
    return v;
}

int parse_int(const std::string& s) {
    std::size_t pos = 0;
    long v;
    try {
        v = std::stol(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("expected an integer, got '" + s + "'");
    }
    if (pos != s.size()) throw ConfigError("trailing junk after integer '" + s + "'");
    return static_cast<int>(v);
}

bool parse_bool(const std::string& s) {
    if (s == "on" || s == "true" || s == "1") return true;
    if (s == "off" || s == "false" || s == "0") return false;
    throw ConfigError("expected on/off, got '" + s + "'");
}

/// One schema entry: how to read and print a key.
struct Entry {
    std::string key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

std::vector<Entry> build_registry() {
    std::vector<Entry> reg;
    auto add = [&reg](std::string key, auto set, auto get) {
        reg.push_back(Entry{std::move(key), set, get});
    };

    auto dbl = [&add](std::string key, double ExperimentConfig::* f) {
        add(std::move(key),
            [f](ExperimentConfig& c, const std::string& v) { c.*f = parse_double(v); },
            [f](const ExperimentConfig& c) { return fmt_double(c.*f); });
    };
    auto num = [&add](std::string key, int ExperimentConfig::* f) {
        add(std::move(key),
            [f](ExperimentConfig& c, const std::string& v) { c.*f = parse_int(v); },
            [f](const ExperimentConfig& c) { return std::to_string(c.*f); });
    };

    num("schema_version", &ExperimentConfig::schema_version);

    // Image dimensions feed both the anchor pyramid and the generator.
    add("image.width",
        [](ExperimentConfig& c, const std::string& v) {
            const double w = parse_double(v);
            c.anchors.image_width = w;
            c.gen.image_width = w;
        },
        [](const ExperimentConfig& c) { return fmt_double(c.anchors.image_width); });
    add("image.height",
        [](ExperimentConfig& c, const std::string& v) {
            const double h = parse_double(v);
            c.anchors.image_height = h;
            c.gen.image_height = h;
        },
        [](const ExperimentConfig& c) { return fmt_double(c.anchors.image_height); });

    add("anchors.levels",
        [](ExperimentConfig& c, const std::string& v) {
            std::vector<AnchorLevel> levels;
            for (const auto& part : split(v, ',')) {
                const auto pair = split(part, ':');
                if (pair.size() != 2) {
                    throw ConfigError("expected stride:base pairs, got '" + part + "'");
                }
                levels.push_back(AnchorLevel{parse_double(pair[0]), parse_double(pair[1])});
            }
            if (levels.empty()) throw ConfigError("anchors.levels must not be empty");
            c.anchors.levels = std::move(levels);
        },
        [](const ExperimentConfig& c) {
            std::string out;
            for (std::size_t i = 0; i < c.anchors.levels.size(); ++i) {
                if (i) out += ",";
                out += fmt_double(c.anchors.levels[i].stride) + ":" +
                       fmt_double(c.anchors.levels[i].base_size);
            }
            return out;
        });

    auto dbl_list = [&add](std::string key, std::vector<double> AnchorConfig::* f) {
        add(std::move(key),
            [f](ExperimentConfig& c, const std::string& v) {
                std::vector<double> vals;
                for (const auto& part : split(v, ',')) vals.push_back(parse_double(part));
                if (vals.empty()) throw ConfigError("list must not be empty");
                c.anchors.*f = std::move(vals);
            },
            [f](const ExperimentConfig& c) {
                std::string out;
                const auto& vals = c.anchors.*f;
                for (std::size_t i = 0; i < vals.size(); ++i) {
                    if (i) out += ",";
                    out += fmt_double(vals[i]);
                }
                return out;
            });
    };
    dbl_list("anchors.aspect_ratios", &AnchorConfig::aspect_ratios);
    dbl_list("anchors.scale_octaves", &AnchorConfig::scale_octaves);

    auto assign_dbl = [&add](std::string key, double AssignParams::* f) {
        add(std::move(key),
            [f](ExperimentConfig& c, const std::string& v) { c.assign.*f = parse_double(v); },
            [f](const ExperimentConfig& c) { return fmt_double(c.assign.*f); });
    };
    assign_dbl("assign.alpha", &AssignParams::alpha);
    assign_dbl("assign.gamma", &AssignParams::gamma);
    add("assign.top_n",
        [](ExperimentConfig& c, const std::string& v) { c.assign.top_n = parse_int(v); },
        [](const ExperimentConfig& c) { return std::to_string(c.assign.top_n); });
    assign_dbl("assign.fg_threshold", &AssignParams::fg_threshold);
    assign_dbl("assign.bg_threshold", &AssignParams::bg_threshold);
    assign_dbl("assign.eps_clamp", &AssignParams::eps_clamp);
    assign_dbl("assign.min_pos_iou", &AssignParams::min_pos_iou);

    add("focal.alpha",
        [](ExperimentConfig& c, const std::string& v) { c.focal.alpha = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt_double(c.focal.alpha); });
    add("focal.gamma",
        [](ExperimentConfig& c, const std::string& v) { c.focal.gamma = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt_double(c.focal.gamma); });
    dbl("loss.smooth_l1_beta", &ExperimentConfig::smooth_l1_beta);

    auto gen_int = [&add](std::string key, int GenConfig::* f) {
        add(std::move(key),
            [f](ExperimentConfig& c, const std::string& v) { c.gen.*f = parse_int(v); },
            [f](const ExperimentConfig& c) { return std::to_string(c.gen.*f); });
    };
    auto gen_dbl = [&add](std::string key, double GenConfig::* f) {
        add(std::move(key),
            [f](ExperimentConfig& c, const std::string& v) { c.gen.*f = parse_double(v); },
            [f](const ExperimentConfig& c) { return fmt_double(c.gen.*f); });
    };
    gen_int("gen.train_scenes", &GenConfig::train_scenes);
    gen_int("gen.eval_scenes", &GenConfig::eval_scenes);
    gen_int("gen.objects_min", &GenConfig::objects_min);
    gen_int("gen.objects_max", &GenConfig::objects_max);
    gen_int("gen.num_classes", &GenConfig::num_classes);
    gen_dbl("gen.size_min", &GenConfig::size_min);
    gen_dbl("gen.size_max", &GenConfig::size_max);
    gen_dbl("gen.overlap_max", &GenConfig::overlap_max);
    gen_dbl("gen.feature_noise_sigma", &GenConfig::feature_noise_sigma);
    gen_dbl("gen.distractor_rate", &GenConfig::distractor_rate);
    gen_int("gen.max_place_retries", &GenConfig::max_place_retries);

    num("train.iterations", &ExperimentConfig::train_iterations);
    num("train.batch_size", &ExperimentConfig::batch_size);
    dbl("train.learning_rate", &ExperimentConfig::learning_rate);
    add("train.lr_milestones",
        [](ExperimentConfig& c, const std::string& v) {
            std::vector<int> vals;
            for (const auto& part : split(v, ',')) vals.push_back(parse_int(part));
            c.lr_milestones = std::move(vals);
        },
        [](const ExperimentConfig& c) {
            std::string out;
            for (std::size_t i = 0; i < c.lr_milestones.size(); ++i) {
                if (i) out += ",";
                out += std::to_string(c.lr_milestones[i]);
            }
            return out;
        });
    dbl("train.lr_decay", &ExperimentConfig::lr_decay);
    dbl("train.momentum", &ExperimentConfig::momentum);
    dbl("train.weight_decay", &ExperimentConfig::weight_decay);
    num("train.hidden_dim", &ExperimentConfig::hidden_dim);
    num("train.loss_sample_every", &ExperimentConfig::loss_sample_every);

    dbl("eval.nms_iou", &ExperimentConfig::eval_nms_iou);
    dbl("eval.score_floor", &ExperimentConfig::eval_score_floor);
    num("eval.pre_nms_topk", &ExperimentConfig::eval_pre_nms_topk);
    num("eval.max_detections", &ExperimentConfig::eval_max_detections);
    dbl("eval.top_fraction", &ExperimentConfig::eval_top_fraction);

    add("method.soft_labels",
        [](ExperimentConfig& c, const std::string& v) { c.method.soft_labels = parse_bool(v); },
        [](const ExperimentConfig& c) { return c.method.soft_labels ? "on" : "off"; });
    add("method.reweighting",
        [](ExperimentConfig& c, const std::string& v) { c.method.reweighting = parse_bool(v); },
        [](const ExperimentConfig& c) { return c.method.reweighting ? "on" : "off"; });

    add("run.seeds",
        [](ExperimentConfig& c, const std::string& v) {
            std::vector<int> vals;
            for (const auto& part : split(v, ',')) vals.push_back(parse_int(part));
            c.seeds = std::move(vals);
        },
        [](const ExperimentConfig& c) {
            std::string out;
            for (std::size_t i = 0; i < c.seeds.size(); ++i) {
                if (i) out += ",";
                out += std::to_string(c.seeds[i]);
            }
            return out;
        });
    add("run.output_dir",
        [](ExperimentConfig& c, const std::string& v) { c.output_dir = v; },
        [](const ExperimentConfig& c) { return c.output_dir; });
    num("run.workers", &ExperimentConfig::workers);

    return reg;
}

const std::vector<Entry>& registry() {
    static const std::vector<Entry> reg = build_registry();
    return reg;
}

const Entry* find_entry(const std::string& key) {
    for (const auto& e : registry()) {
        if (e.key == key) return &e;
    }
    return nullptr;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (schema_version != 1) throw ConfigError("unsupported schema_version");
    // Sub-configs carry their own invariants.
    try {
        assign.validate();
        focal.validate();
        gen.validate();
        generate(AnchorConfig{anchors.levels, anchors.aspect_ratios, anchors.scale_octaves, 0.0, 0.0});
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (!(smooth_l1_beta > 0.0)) throw ConfigError("loss.smooth_l1_beta must be positive");
    if (train_iterations < 0) throw ConfigError("train.iterations must be >= 0");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (!(learning_rate >= 0.0)) throw ConfigError("train.learning_rate must be >= 0");
    if (!(lr_decay > 0.0)) throw ConfigError("train.lr_decay must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("train.momentum must be in [0, 1)");
    if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
    if (hidden_dim < 0) throw ConfigError("train.hidden_dim must be >= 0");
    if (loss_sample_every < 1) throw ConfigError("train.loss_sample_every must be >= 1");
    if (eval_nms_iou < 0.0 || eval_nms_iou > 1.0) throw ConfigError("eval.nms_iou must be in [0, 1]");
    if (eval_score_floor < 0.0) throw ConfigError("eval.score_floor must be >= 0");
    if (eval_pre_nms_topk < 1) throw ConfigError("eval.pre_nms_topk must be >= 1");
    if (eval_max_detections < 1) throw ConfigError("eval.max_detections must be >= 1");
    if (!(eval_top_fraction > 0.0) || eval_top_fraction > 1.0) {
        throw ConfigError("eval.top_fraction must be in (0, 1]");
    }
    if (workers < 1) throw ConfigError("run.workers must be >= 1");
    for (int m : lr_milestones) {
        if (m < 0) throw ConfigError("train.lr_milestones must be non-negative");
    }
}

std::string ExperimentConfig::method_name() const {
    if (method.soft_labels && method.reweighting) return "sl_sr";
    if (method.soft_labels) return "sl_only";
    if (method.reweighting) return "sr_only";
    return "baseline";
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& source) {
    ExperimentConfig config;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;

    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        const std::string where = source + ":" + std::to_string(line_no);
        if (eq == std::string::npos) {
            throw ConfigError(where + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        const Entry* entry = find_entry(key);
        if (entry == nullptr) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
        try {
            entry->set(config, value);
        } catch (const std::exception& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    return config;
}

std::string serialize_config(const ExperimentConfig& config) {
    std::ostringstream os;
    for (const auto& e : registry()) {
        os << e.key << " = " << e.get(config) << "\n";
    }
    return os.str();
}

std::string experiment_text(const ExperimentConfig& config) {
    std::ostringstream os;
    for (const auto& e : registry()) {
        if (e.key == "run.workers" || e.key == "run.output_dir") continue;
        os << e.key << " = " << e.get(config) << "\n";
    }
    return os.str();
}

void apply_env_overrides(ExperimentConfig& config) {
    for (const auto& e : registry()) {
        std::string env_name = "NA_";
        for (char c : e.key) {
            env_name.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(
                                                    static_cast<unsigned char>(c))));
        }
        const char* value = std::getenv(env_name.c_str());
        if (value == nullptr) continue;
        try {
            e.set(config, trim(value));
        } catch (const std::exception& ex) {
            throw ConfigError(env_name + ": " + ex.what());
        }
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    ExperimentConfig config = parse_config_text(buf.str(), path);
    apply_env_overrides(config);
    config.validate();
    return config;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    const std::string text = experiment_text(config);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string config_hash_hex(const ExperimentConfig& config) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash(config)));
    return buf;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& e : registry()) keys.push_back(e.key);
    return keys;
}

}  // namespace na
