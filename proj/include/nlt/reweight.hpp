#pragma once

#include <span>
#include <vector>

#include "nlt/matrix.hpp"
#include "nlt/model.hpp"
#include "nlt/selection.hpp"

namespace nlt {

// Per-class gaussian-tail weighting state fitted on corrected noisy samples.
// Epoch 0 keeps the init (mean 1/C, variance 1); classes with no evidence in
// an epoch retain their previous values.
struct CorrectionState {
    std::vector<double> mean;
    std::vector<double> variance;
    double ema_momentum = 0.99;
    double weight_cap = 1.0;  // upper bound of sample weights
    int epoch = 0;

    static CorrectionState init(int class_count, double ema_momentum, double weight_cap);
};

struct ClassStats {
    std::vector<double> mean;
    std::vector<double> variance;
    std::vector<int> count;  // count[c] == 0 marks "no evidence this epoch"
};

struct CorrectionPlan {
    std::vector<int> corrected_labels;  // teacher argmax, every sample
    std::vector<double> confidence;     // student probability at the corrected label
    std::vector<double> weights;        // in (0, weight_cap]
};

// Variance floor when evaluating the weight function.
inline constexpr double kVarianceFloor = 1e-4;

// Argmax over teacher softmax on un-augmented inputs; ties -> lowest index.
std::vector<int> correct_labels(const Mlp& teacher, const Matrix& features);

// Class-conditional mean/variance of confidence over noisy samples whose
// corrected label is c, each normalised by the per-class count.
ClassStats batch_stats(std::span<const double> confidence, std::span<const int> corrected_labels,
                       std::span<const int> noisy_indices, int class_count);

// Single pooled mean/variance over all noisy samples, broadcast to every class.
ClassStats pooled_stats(std::span<const double> confidence, std::span<const int> noisy_indices,
                        int class_count);

void update_distribution(CorrectionState& state, const ClassStats& stats);

// cap * exp(-(conf - mean)^2 / (2 * variance)) below the class mean, cap at or
// above it. Continuous at conf == mean, nondecreasing in conf.
double sample_weight(double confidence, int cls, const CorrectionState& state);

struct PlanOptions {
    bool pooled_stats = false;  // single mu/sigma for all classes
};

// Corrects labels with the teacher, updates the state from the noisy subset,
// then weights every sample (clean weights feed the consistency term).
CorrectionPlan build_plan(const EpochProbe& probe, const Mlp& teacher, const Matrix& features,
                          const Partition& partition, CorrectionState& state,
                          const PlanOptions& opts = {});

}  // namespace nlt
