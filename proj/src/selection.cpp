#include "nlt/selection.hpp"

#include <algorithm>
#include <stdexcept>

namespace nlt {

ThresholdState ThresholdState::init(int class_count, double ema_momentum) {
    ThresholdState s;
    s.global_threshold = 1.0 / class_count;
    s.class_expectation.assign(class_count, 1.0 / class_count);
    s.ema_momentum = ema_momentum;
    s.epoch = 0;
    return s;
}

EpochProbe probe_epoch(const Mlp& student, const Matrix& features, std::span<const int> given_labels) {
    EpochProbe probe;
    probe.probs = softmax_probs(forward(student, features));
    probe.given_label_prob.resize(features.rows);
    for (std::size_t i = 0; i < features.rows; ++i)
        probe.given_label_prob[i] = probe.probs(i, given_labels[i]);
    return probe;
}

void update_global_threshold(ThresholdState& state, const EpochProbe& probe) {
    if (state.epoch == 0) return;
    double sum = 0.0;
    for (double p : probe.given_label_prob) sum += p;
    const double mean = sum / static_cast<double>(probe.given_label_prob.size());
    const double m = state.ema_momentum;
    state.global_threshold = m * state.global_threshold + (1.0 - m) * mean;
}

void update_class_expectations(ThresholdState& state, const EpochProbe& probe) {
    if (state.epoch == 0) return;
    const std::size_t n = probe.probs.rows;
    const std::size_t c = probe.probs.cols;
    std::vector<double> mean(c, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = probe.probs.row(i);
        for (std::size_t j = 0; j < c; ++j) mean[j] += row[j];
    }
    const double m = state.ema_momentum;
    for (std::size_t j = 0; j < c; ++j)
        state.class_expectation[j] =
            m * state.class_expectation[j] + (1.0 - m) * mean[j] / static_cast<double>(n);
}

std::vector<double> local_thresholds(const ThresholdState& state) {
    return local_thresholds(state, state.global_threshold);
}

std::vector<double> local_thresholds(const ThresholdState& state, double global_bar) {
    const double top = *std::max_element(state.class_expectation.begin(), state.class_expectation.end());
    if (!(top > 0.0)) throw std::invalid_argument("local_thresholds: class expectations must be positive");
    std::vector<double> out(state.class_expectation.size());
    for (std::size_t c = 0; c < out.size(); ++c)
        out[c] = state.class_expectation[c] / top * global_bar;
    return out;
}

Partition make_partition(const EpochProbe& probe, std::span<const int> given_labels,
                         std::span<const double> local_thresholds) {
    Partition part;
    const std::size_t n = probe.given_label_prob.size();
    part.clean.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (probe.given_label_prob[i] > local_thresholds[given_labels[i]])
            part.clean.push_back(static_cast<int>(i));
        else
            part.noisy.push_back(static_cast<int>(i));
    }
    return part;
}

}  // namespace nlt
