// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.
//
// Experiment runner for noisy-anchor training on synthetic detection
// scenes: single runs, hyperparameter sweeps, report generation, scene
// materialization and self-checks.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "noisy_anchor/config.hpp"
#include "noisy_anchor/runner.hpp"
#include "noisy_anchor/synthdata.hpp"

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::vector<int> seeds;
    int workers = 0;  // 0 = keep config value
};

na::ExperimentConfig load_with_overrides(const CommonOpts& opts) {
    na::ExperimentConfig config = na::load_config(opts.config_path);
    if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
    if (!opts.seeds.empty()) config.seeds = opts.seeds;
    if (opts.workers > 0) config.workers = opts.workers;
    config.validate();
    return config;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
    auto* c = cmd->add_option("--config", opts.config_path, "experiment config file");
    if (config_required) c->required();
    cmd->add_option("--out", opts.out_dir, "output directory (overrides run.output_dir)");
    cmd->add_option("--seeds", opts.seeds, "comma-separated seeds (overrides run.seeds)")
        ->delimiter(',');
    cmd->add_option("--workers", opts.workers, "parallel workers (overrides run.workers)");
}

int cmd_run(const CommonOpts& opts) {
    const na::ExperimentConfig config = load_with_overrides(opts);
    const na::RunRecord record = na::run_experiment(config);
    const std::string path = na::write_run_record(record, config.output_dir);
    std::cout << "method " << record.method << " config " << record.config_hash << "\n";
    std::cout << "seeds ok " << record.seeds_ok << "/" << record.seeds.size() << ", mean AP "
              << record.ap_mean << " +/- " << record.ap_std << "\n";
    for (const auto& s : record.seeds) {
        if (!s.ok) std::cout << "  seed " << s.seed << " FAILED: " << s.error << "\n";
    }
    std::cout << "record written to " << path << "\n";
    return record.seeds_ok > 0 ? 0 : 1;
}

int cmd_sweep(const CommonOpts& opts, const std::string& axis_name,
              const std::vector<double>& values) {
    const na::ExperimentConfig config = load_with_overrides(opts);
    const na::SweepAxis axis = na::sweep_axis_from_name(axis_name);
    const std::vector<na::RunRecord> records = na::run_sweep(config, axis, values);

    fs::create_directories(config.output_dir);
    for (const auto& r : records) na::write_run_record(r, config.output_dir);

    const std::string csv_path =
        (fs::path(config.output_dir) / ("sweep_" + na::sweep_axis_name(axis) + ".csv")).string();
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) {
        std::cerr << "cannot write " << csv_path << "\n";
        return 1;
    }
    csv << na::sweep_csv(axis, values, records);
    std::cout << "sweep over " << na::sweep_axis_name(axis) << ": " << records.size()
              << " runs, table written to " << csv_path << "\n";
    return 0;
}

int cmd_report(const std::string& run_dir) {
    std::cout << na::write_report(run_dir);
    return 0;
}

int cmd_gen(const CommonOpts& opts) {
    const na::ExperimentConfig config = load_with_overrides(opts);
    const na::AnchorSet anchors = na::generate(config.anchors);
    fs::create_directories(config.output_dir);

    if (config.seeds.empty()) {
        std::cerr << "run.seeds is empty: nothing to materialize\n";
        return 1;
    }
    for (int seed : config.seeds) {
        const auto train = na::generate_split(config.gen, anchors, na::train_scene_base(seed),
                                              config.gen.train_scenes);
        const auto eval = na::generate_split(config.gen, anchors, na::eval_scene_base(seed),
                                             config.gen.eval_scenes);
        const auto dir = fs::path(config.output_dir);
        na::write_scenes((dir / ("train_seed" + std::to_string(seed) + ".scenes")).string(),
                         config.gen, train);
        na::write_scenes((dir / ("eval_seed" + std::to_string(seed) + ".scenes")).string(),
                         config.gen, eval);
        std::cout << "seed " << seed << ": " << train.size() << " train / " << eval.size()
                  << " eval scenes written\n";
    }
    return 0;
}

int cmd_check(const std::string& config_path, const std::string& annotations) {
    const int failures = na::run_selfcheck(std::cout);

    if (!annotations.empty()) {
        if (config_path.empty()) {
            std::cerr << "--annotations requires --config for anchor/assignment parameters\n";
            return 1;
        }
        const na::ExperimentConfig config = na::load_config(config_path);
        const auto scenes = na::scenes_from_coco_json(annotations);
        std::cout << na::assignment_audit(scenes, config);
    }
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"noisy-anchor detection training experiments"};
    app.require_subcommand(1);

    CommonOpts run_opts, sweep_opts, gen_opts;
    std::string axis_name;
    std::vector<double> axis_values;
    std::string report_dir;
    std::string check_config, check_annotations;

    auto* run = app.add_subcommand("run", "train and evaluate one configuration");
    add_common(run, run_opts);

    auto* sweep = app.add_subcommand("sweep", "run a hyperparameter sweep");
    add_common(sweep, sweep_opts);
    sweep->add_option("--axis", axis_name, "alpha | gamma | n_pos")->required();
    sweep->add_option("--values", axis_values, "comma-separated sweep values")
        ->required()
        ->delimiter(',');

    auto* report = app.add_subcommand("report", "summarize run records in a directory");
    report->add_option("--out", report_dir, "directory holding run_*.json records")->required();

    auto* gen = app.add_subcommand("gen", "materialize synthetic train/eval splits");
    add_common(gen, gen_opts);

    auto* check = app.add_subcommand("check", "run the oracle/property self-checks");
    check->add_option("--config", check_config, "experiment config (for --annotations)");
    check->add_option("--annotations", check_annotations,
                      "COCO-style annotation JSON to audit assignment statistics on");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_opts);
        if (sweep->parsed()) return cmd_sweep(sweep_opts, axis_name, axis_values);
        if (report->parsed()) return cmd_report(report_dir);
        if (gen->parsed()) return cmd_gen(gen_opts);
        if (check->parsed()) return cmd_check(check_config, check_annotations);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
