// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#include <cstdlib>

#include <doctest.h>

#include "noisy_anchor/config.hpp"

using namespace na;

TEST_CASE("defaults serialize to a parse fixed point") {
    const ExperimentConfig defaults;
    const std::string s1 = serialize_config(defaults);
    const ExperimentConfig parsed = parse_config_text(s1, "mem");
    const std::string s2 = serialize_config(parsed);
    CHECK(s1 == s2);
    parsed.validate();
}

TEST_CASE("values survive a round trip") {
    ExperimentConfig c;
    c.assign.alpha = 0.625;
    c.assign.top_n = 17;
    c.anchors.levels = {{4.0, 6.5}, {32.0, 48.0}};
    c.lr_milestones = {100, 200};
    c.seeds = {9, 8, 7};
    c.method.soft_labels = false;
    c.output_dir = "some/dir";
    c.gen.feature_noise_sigma = 0.125;

    const ExperimentConfig back = parse_config_text(serialize_config(c), "mem");
    CHECK(back.assign.alpha == c.assign.alpha);
    CHECK(back.assign.top_n == 17);
    CHECK(back.anchors.levels.size() == 2);
    CHECK(back.anchors.levels[1].base_size == 48.0);
    CHECK(back.lr_milestones == c.lr_milestones);
    CHECK(back.seeds == c.seeds);
    CHECK(back.method.soft_labels == false);
    CHECK(back.output_dir == "some/dir");
    CHECK(back.gen.feature_noise_sigma == 0.125);
}

TEST_CASE("unknown keys are rejected by name and line") {
    const std::string text = "assign.alpha = 0.5\nno.such.key = 3\n";
    try {
        parse_config_text(text, "test.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("test.cfg:2") != std::string::npos);
        CHECK(msg.find("no.such.key") != std::string::npos);
    }
}

TEST_CASE("malformed values are line-anchored") {
    try {
        parse_config_text("assign.alpha = banana\n", "c");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("c:1") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("assign.alpha 0.5\n", "c"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("anchors.levels = 8\n", "c"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("method.soft_labels = maybe\n", "c"), ConfigError);
}

TEST_CASE("comments and blank lines are skipped") {
    const std::string text =
        "# full line comment\n"
        "\n"
        "assign.alpha = 0.5  # trailing comment\n";
    const ExperimentConfig c = parse_config_text(text, "mem");
    CHECK(c.assign.alpha == 0.5);
}

TEST_CASE("environment overrides apply after the file") {
    ExperimentConfig c = parse_config_text("assign.alpha = 0.5\n", "mem");
    REQUIRE(setenv("NA_ASSIGN_ALPHA", "0.25", 1) == 0);
    REQUIRE(setenv("NA_METHOD_SOFT_LABELS", "off", 1) == 0);
    apply_env_overrides(c);
    unsetenv("NA_ASSIGN_ALPHA");
    unsetenv("NA_METHOD_SOFT_LABELS");
    CHECK(c.assign.alpha == 0.25);
    CHECK(c.method.soft_labels == false);

    REQUIRE(setenv("NA_ASSIGN_ALPHA", "junk", 1) == 0);
    CHECK_THROWS_AS(apply_env_overrides(c), ConfigError);
    unsetenv("NA_ASSIGN_ALPHA");
}

TEST_CASE("validation catches bad combinations") {
    ExperimentConfig c;
    c.assign.bg_threshold = 0.9;  // above fg_threshold
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = ExperimentConfig{};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = ExperimentConfig{};
    c.eval_top_fraction = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = ExperimentConfig{};
    c.gen.size_max = 10000.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("hash is stable and content-sensitive") {
    ExperimentConfig a;
    ExperimentConfig b;
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash_hex(a).size() == 16);

    b.assign.alpha = 0.5;
    CHECK(config_hash(a) != config_hash(b));

    const ExperimentConfig reparsed = parse_config_text(serialize_config(a), "mem");
    CHECK(config_hash(a) == config_hash(reparsed));
}

TEST_CASE("method names cover the matrix") {
    ExperimentConfig c;
    c.method = {true, true};
    CHECK(c.method_name() == "sl_sr");
    c.method = {true, false};
    CHECK(c.method_name() == "sl_only");
    c.method = {false, true};
    CHECK(c.method_name() == "sr_only");
    c.method = {false, false};
    CHECK(c.method_name() == "baseline");
}

TEST_CASE("image dimensions feed anchors and generator together") {
    const ExperimentConfig c = parse_config_text("image.width = 96\nimage.height = 80\n", "mem");
    CHECK(c.anchors.image_width == 96.0);
    CHECK(c.gen.image_width == 96.0);
    CHECK(c.anchors.image_height == 80.0);
    CHECK(c.gen.image_height == 80.0);
}

TEST_CASE("config_keys lists the documented schema") {
    const auto keys = config_keys();
    CHECK(keys.size() > 30);
    CHECK(keys.front() == "schema_version");
}
