#pragma once

#include <span>
#include <vector>

#include "nlt/matrix.hpp"
#include "nlt/model.hpp"

namespace nlt {

// Epoch-wise selection state: a dataset-level confidence bar plus per-class
// expectations, both tracked by EMA. Epoch 0 keeps the 1/C initialisation;
// updates apply from epoch 1 on. The owner advances `epoch` once per epoch
// after running both updates.
struct ThresholdState {
    double global_threshold = 0.0;
    std::vector<double> class_expectation;
    double ema_momentum = 0.99;
    int epoch = 0;

    static ThresholdState init(int class_count, double ema_momentum);
};

struct EpochProbe {
    Matrix probs;                          // N x C, student softmax on raw inputs
    std::vector<double> given_label_prob;  // probs[i][given_labels[i]]
};

struct Partition {
    std::vector<int> clean;
    std::vector<int> noisy;
};

// Full-dataset forward pass on un-augmented features.
EpochProbe probe_epoch(const Mlp& student, const Matrix& features, std::span<const int> given_labels);

// global <- m * global + (1-m) * mean_i probs[i][given[i]]   (epoch > 0)
void update_global_threshold(ThresholdState& state, const EpochProbe& probe);

// class_expectation[c] <- m * prev + (1-m) * mean over ALL samples of probs[i][c].
void update_class_expectations(ThresholdState& state, const EpochProbe& probe);

// local[c] = class_expectation[c] / max_c' class_expectation[c'] * bar.
std::vector<double> local_thresholds(const ThresholdState& state);
std::vector<double> local_thresholds(const ThresholdState& state, double global_bar);

// clean iff probs[i][given[i]] > local[given[i]] (strict); rest is noisy.
Partition make_partition(const EpochProbe& probe, std::span<const int> given_labels,
                         std::span<const double> local_thresholds);

}  // namespace nlt
