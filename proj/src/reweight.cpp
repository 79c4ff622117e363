#include "nlt/reweight.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nlt {

CorrectionState CorrectionState::init(int class_count, double ema_momentum, double weight_cap) {
    CorrectionState s;
    s.mean.assign(class_count, 1.0 / class_count);
    s.variance.assign(class_count, 1.0);
    s.ema_momentum = ema_momentum;
    s.weight_cap = weight_cap;
    s.epoch = 0;
    return s;
}

std::vector<int> correct_labels(const Mlp& teacher, const Matrix& features) {
    const Matrix probs = softmax_probs(forward(teacher, features));
    std::vector<int> labels(probs.rows);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        const double* row = probs.row(i);
        int best = 0;
        for (std::size_t c = 1; c < probs.cols; ++c)
            if (row[c] > row[best]) best = static_cast<int>(c);  // ties keep the lowest index
        labels[i] = best;
    }
    return labels;
}

ClassStats batch_stats(std::span<const double> confidence, std::span<const int> corrected_labels,
                       std::span<const int> noisy_indices, int class_count) {
    ClassStats stats;
    stats.mean.assign(class_count, 0.0);
    stats.variance.assign(class_count, 0.0);
    stats.count.assign(class_count, 0);
    for (int i : noisy_indices) {
        const int c = corrected_labels[i];
        stats.mean[c] += confidence[i];
        ++stats.count[c];
    }
    for (int c = 0; c < class_count; ++c)
        if (stats.count[c] > 0) stats.mean[c] /= stats.count[c];
    for (int i : noisy_indices) {
        const int c = corrected_labels[i];
        const double d = confidence[i] - stats.mean[c];
        stats.variance[c] += d * d;
    }
    for (int c = 0; c < class_count; ++c)
        if (stats.count[c] > 0) stats.variance[c] /= stats.count[c];
    return stats;
}

ClassStats pooled_stats(std::span<const double> confidence, std::span<const int> noisy_indices,
                        int class_count) {
    ClassStats stats;
    stats.mean.assign(class_count, 0.0);
    stats.variance.assign(class_count, 0.0);
    stats.count.assign(class_count, 0);
    if (noisy_indices.empty()) return stats;
    double mean = 0.0;
    for (int i : noisy_indices) mean += confidence[i];
    mean /= static_cast<double>(noisy_indices.size());
    double var = 0.0;
    for (int i : noisy_indices) {
        const double d = confidence[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(noisy_indices.size());
    for (int c = 0; c < class_count; ++c) {
        stats.mean[c] = mean;
        stats.variance[c] = var;
        stats.count[c] = static_cast<int>(noisy_indices.size());
    }
    return stats;
}

void update_distribution(CorrectionState& state, const ClassStats& stats) {
    if (state.epoch == 0) return;
    const double m = state.ema_momentum;
    for (std::size_t c = 0; c < state.mean.size(); ++c) {
        if (stats.count[c] == 0) continue;  // no evidence: keep the previous estimate
        state.mean[c] = m * state.mean[c] + (1.0 - m) * stats.mean[c];
        state.variance[c] = m * state.variance[c] + (1.0 - m) * stats.variance[c];
    }
}

double sample_weight(double confidence, int cls, const CorrectionState& state) {
    const double mu = state.mean[cls];
    if (confidence >= mu) return state.weight_cap;
    const double var = std::max(state.variance[cls], kVarianceFloor);
    const double d = confidence - mu;
    // exp underflows for extreme tails; keep the weight strictly positive.
    return std::max(state.weight_cap * std::exp(-d * d / (2.0 * var)),
                    std::numeric_limits<double>::min());
}

CorrectionPlan build_plan(const EpochProbe& probe, const Mlp& teacher, const Matrix& features,
                          const Partition& partition, CorrectionState& state,
                          const PlanOptions& opts) {
    CorrectionPlan plan;
    plan.corrected_labels = correct_labels(teacher, features);
    const std::size_t n = features.rows;
    plan.confidence.resize(n);
    for (std::size_t i = 0; i < n; ++i) plan.confidence[i] = probe.probs(i, plan.corrected_labels[i]);

    const int c = static_cast<int>(state.mean.size());
    const ClassStats stats =
        opts.pooled_stats ? pooled_stats(plan.confidence, partition.noisy, c)
                          : batch_stats(plan.confidence, plan.corrected_labels, partition.noisy, c);
    update_distribution(state, stats);

    plan.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        plan.weights[i] = sample_weight(plan.confidence[i], plan.corrected_labels[i], state);
    return plan;
}

}  // namespace nlt
