#pragma once

#include <string>
#include <vector>

#include "nlt/dataset.hpp"
#include "nlt/error.hpp"
#include "nlt/trainer.hpp"

namespace nlt {

struct DataConfig {
    int classes = 4;
    int per_class = 1000;
    int dim = 2;
    std::vector<double> spread = {1.0, 1.0, 1.0, 1.0};
    int test_per_class = 500;
};

struct RunConfig {
    std::string name = "run";
    DataConfig data;
    NoiseSpec noise;
    TrainConfig train;
    std::string out_root = "runs";  // NLT_OUT_ROOT env var overrides
    std::string out_dir;            // exact output directory; overrides out_root naming
};

void validate(const RunConfig& cfg);

// Shipped experiment presets: sym20, sym40, sym80, asym40, openset-asym40,
// heterogeneous.
RunConfig preset(const std::string& name);
std::vector<std::string> preset_names();

// Flat key = value config files; unknown keys and malformed values raise
// ConfigError naming the offending field.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);
void write_config_file(const RunConfig& cfg, const std::string& path);
std::string config_to_text(const RunConfig& cfg);

// Ground truth lives here, never in the training path.
bool clean_mask(const Dataset& ds, std::size_t i);

struct SelectionMetrics {
    double precision = 1.0;  // empty selection convention
    double recall = 0.0;
    std::vector<double> per_class_precision;  // keyed by given label
};

SelectionMetrics selection_metrics(const Partition& partition, const Dataset& ds);

double evaluate_accuracy(const Mlp& model, const Dataset& test);

Dataset build_train_dataset(const RunConfig& cfg);
Dataset build_test_dataset(const RunConfig& cfg);

struct RunPaths {
    std::string dir;
    std::string epochs_csv;
    std::string thresholds_csv;
    std::string distributions_csv;
    std::string report_json;
    std::string checkpoint;
    std::string config_echo;
};

struct RunOutcome {
    RunPaths paths;
    std::vector<EpochStats> epochs;
    double final_test_accuracy = 0.0;
    SelectionMetrics final_selection;
    double wall_seconds = 0.0;
};

// Executes the configured experiment and writes epochs.csv, thresholds.csv,
// distributions.csv, report.json, config.cfg and checkpoint.bin into the run
// directory.
RunOutcome run(const RunConfig& cfg);

// Delta summary (JSON text) between two run directories; requires identical
// dataset spec, noise spec and seed.
std::string compare_runs(const std::string& dir_a, const std::string& dir_b);

// Runs every *.cfg in the directory; returns the number of failures.
int sweep(const std::string& config_dir);

}  // namespace nlt
