// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "noisy_anchor/runner.hpp"

using namespace na;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig c;
    c.anchors.levels = {{16.0, 16.0}};
    c.anchors.aspect_ratios = {1.0};
    c.anchors.scale_octaves = {1.0};
    c.anchors.image_width = 64;
    c.anchors.image_height = 64;
    c.gen.image_width = 64;
    c.gen.image_height = 64;
    c.gen.train_scenes = 16;
    c.gen.eval_scenes = 6;
    c.gen.objects_min = 1;
    c.gen.objects_max = 2;
    c.gen.num_classes = 2;
    c.gen.size_min = 12;
    c.gen.size_max = 30;
    c.train_iterations = 40;
    c.batch_size = 2;
    c.learning_rate = 0.1;
    c.loss_sample_every = 10;
    c.eval_pre_nms_topk = 50;
    c.seeds = {1, 2};
    c.workers = 1;
    return c;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

nlohmann::json without_timing(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    j.erase("wall_clock_seconds");
    return j;
}

}  // namespace

TEST_CASE("scene seed ranges are disjoint between train and eval") {
    const ExperimentConfig c = tiny_config();
    for (int seed : {1, 2, 50}) {
        const auto t0 = train_scene_base(seed);
        const auto e0 = eval_scene_base(seed);
        CHECK(t0 + static_cast<std::uint64_t>(c.gen.train_scenes) <= e0);
    }
}

TEST_CASE("detect_scene honors the score floor and cap") {
    const ExperimentConfig c = tiny_config();
    const AnchorSet anchors = generate(c.anchors);
    const Scene scene = generate_scene(c.gen, anchors, 9);
    HeadConfig hc;
    hc.feature_dim = feature_dim(c.gen.num_classes);
    hc.num_classes = c.gen.num_classes;
    const HeadParams params = HeadParams::init(hc, 4);

    const auto dets = detect_scene(params, scene, anchors, c);
    CHECK(dets.size() <= static_cast<std::size_t>(c.eval_pre_nms_topk));
    for (std::size_t i = 0; i < dets.size(); ++i) {
        CHECK(dets[i].confidence >= c.eval_score_floor);
        CHECK(dets[i].box.x1 >= 0.0);
        CHECK(dets[i].box.x2 <= c.gen.image_width);
        if (i > 0) CHECK(dets[i - 1].confidence >= dets[i].confidence);
    }
}

TEST_CASE("run_seed trains and evaluates") {
    const SeedResult r = run_seed(tiny_config(), 1);
    REQUIRE(r.ok);
    CHECK(r.eval.curves.size() == 10);
    CHECK_FALSE(r.loss_curve.empty());
    CHECK(r.loss_curve.front().iteration == 0);
    for (const auto& s : r.loss_curve) {
        CHECK(std::isfinite(s.cls_loss));
        CHECK(std::isfinite(s.reg_loss));
    }
}

TEST_CASE("empty seed list refuses to run") {
    ExperimentConfig c = tiny_config();
    c.seeds.clear();
    CHECK_THROWS_AS(run_experiment(c), ConfigError);
}

TEST_CASE("run records are byte-identical apart from timing") {
    const ExperimentConfig c = tiny_config();
    const RunRecord a = run_experiment(c);
    const RunRecord b = run_experiment(c);
    CHECK(without_timing(run_record_json(a)) == without_timing(run_record_json(b)));
    CHECK(without_timing(run_record_json(a)).dump() == without_timing(run_record_json(b)).dump());
}

TEST_CASE("parallel workers produce the single-worker record") {
    ExperimentConfig c = tiny_config();
    const RunRecord serial = run_experiment(c);
    c.workers = 2;
    const RunRecord parallel = run_experiment(c);
    CHECK(without_timing(run_record_json(serial)) == without_timing(run_record_json(parallel)));
}

TEST_CASE("aggregates cover completed seeds") {
    const RunRecord r = run_experiment(tiny_config());
    CHECK(r.seeds_ok == 2);
    CHECK(r.seeds.size() == 2);
    CHECK(r.ap_mean >= 0.0);
    CHECK(r.ap_mean <= 1.0);
    CHECK(r.method == "sl_sr");
    CHECK(r.config_hash.size() == 16);
}

TEST_CASE("sweep produces one record per value and a csv") {
    ExperimentConfig c = tiny_config();
    c.seeds = {1};
    c.train_iterations = 10;
    const std::vector<double> values = {0.0, 0.75, 1.0};
    const auto records = run_sweep(c, SweepAxis::kAlpha, values);
    REQUIRE(records.size() == 3);

    // Hashes differ across values; the middle one equals a direct run.
    CHECK(records[0].config_hash != records[1].config_hash);
    ExperimentConfig direct = c;
    direct.assign.alpha = 0.75;
    CHECK(records[1].config_hash == config_hash_hex(direct));

    const std::string csv = sweep_csv(SweepAxis::kAlpha, values, records);
    std::istringstream is(csv);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(is, line)) lines.push_back(line);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "alpha,seeds_ok,ap_mean,ap_std,ap50_mean,ap75_mean");
    CHECK(lines[1].rfind("0,", 0) == 0);

    CHECK_THROWS_AS(run_sweep(c, SweepAxis::kTopN, {2.5}), ConfigError);
    CHECK_THROWS_AS(run_sweep(c, SweepAxis::kAlpha, {}), ConfigError);
    CHECK(sweep_axis_from_name("n_pos") == SweepAxis::kTopN);
    CHECK_THROWS_AS(sweep_axis_from_name("bogus"), ConfigError);
}

TEST_CASE("report summarizes stored records") {
    TempDir dir("na_test_report");
    ExperimentConfig c = tiny_config();
    c.seeds = {1};
    c.train_iterations = 10;

    c.method = {false, false};
    write_run_record(run_experiment(c), dir.path.string());
    c.method = {true, true};
    write_run_record(run_experiment(c), dir.path.string());

    const std::string summary = write_report(dir.path.string());
    CHECK(summary.find("baseline") != std::string::npos);
    CHECK(summary.find("sl_sr") != std::string::npos);
    CHECK(fs::exists(dir.path / "methods.csv"));
    CHECK(fs::exists(dir.path / "stats.csv"));
    CHECK(fs::exists(dir.path / "report_summary.txt"));

    // Two method rows plus header.
    std::ifstream f(dir.path / "methods.csv");
    std::string line;
    int rows = 0;
    while (std::getline(f, line)) ++rows;
    CHECK(rows == 3);

    // PR sample files: 10 thresholds x 101 samples plus header.
    int pr_files = 0;
    for (const auto& e : fs::directory_iterator(dir.path)) {
        if (e.path().filename().string().rfind("pr_", 0) == 0) {
            ++pr_files;
            std::ifstream pf(e.path());
            int pr_rows = 0;
            while (std::getline(pf, line)) ++pr_rows;
            CHECK(pr_rows == 1 + 10 * kRecallSamples);
        }
    }
    CHECK(pr_files == 2);
}

TEST_CASE("report on an empty directory fails") {
    TempDir dir("na_test_report_empty");
    CHECK_THROWS_AS(write_report(dir.path.string()), std::runtime_error);
}

TEST_CASE("failed seeds are recorded without aborting the run") {
    ExperimentConfig c = tiny_config();
    c.seeds = {1, 2};
    // Guarantee placement failure: two large objects with no tolerated overlap.
    c.gen.objects_min = 3;
    c.gen.objects_max = 3;
    c.gen.size_min = 60;
    c.gen.size_max = 64;
    c.gen.overlap_max = 0.0;
    c.gen.max_place_retries = 5;
    const RunRecord r = run_experiment(c);
    CHECK(r.seeds_ok == 0);
    for (const auto& s : r.seeds) {
        CHECK_FALSE(s.ok);
        CHECK(s.error.find("overlap_max") != std::string::npos);
    }
}

TEST_CASE("assignment audit reports label statistics") {
    const ExperimentConfig c = tiny_config();
    const AnchorSet anchors = generate(c.anchors);
    std::vector<Scene> scenes;
    for (int i = 0; i < 3; ++i) scenes.push_back(generate_scene(c.gen, anchors, 100 + i));
    const std::string audit = assignment_audit(scenes, c);
    CHECK(audit.find("assignment audit over 3 scenes") != std::string::npos);
    CHECK(audit.find("hard labels:") != std::string::npos);
    CHECK(audit.find("top-30 positives") != std::string::npos);
}

TEST_CASE("selfcheck passes") {
    std::ostringstream out;
    CHECK(run_selfcheck(out) == 0);
    CHECK(out.str().find("[FAIL]") == std::string::npos);
}
