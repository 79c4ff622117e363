#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nlt/dataset.hpp"
#include "nlt/model.hpp"
#include "nlt/reweight.hpp"
#include "nlt/selection.hpp"

namespace nlt {

struct AblationFlags {
    bool no_selection = false;         // plain cross-entropy on given labels, every epoch
    bool no_noisy_loss = false;        // drop the corrected-noisy term
    bool no_consistency = false;       // drop the strong-view term on clean samples
    bool no_local_threshold = false;   // global bar only
    bool no_global_threshold = false;  // local scaling against a fixed 1/C bar
    bool no_threshold_ema = false;     // selection bars use the raw epoch mean
    bool no_reweight = false;          // all weights pinned to the cap
    bool no_distribution_ema = false;  // weighting stats use the raw epoch values
    bool no_class_balance = false;     // pooled mu/sigma instead of per class
};

struct TrainConfig {
    int total_epochs = 60;
    int warmup_epochs = 10;
    int batch_size = 128;
    double base_lr = 0.05;
    double weight_decay = 5e-4;
    double ema_momentum = 0.99;   // threshold / statistics EMA
    double teacher_alpha = 0.95;  // teacher EMA per optimisation step
    double weight_cap = 1.0;
    std::vector<int> hidden_dims = {64, 64};
    std::uint64_t seed = 1;
    AblationFlags ablation;
    int save_every = 0;             // checkpoint every k epochs, 0 = off
    std::string checkpoint_path;    // where save_every writes
    std::string resume_path;        // resume from a checkpoint if nonempty
};

void validate(const TrainConfig& cfg);

// The slice of a dataset the trainer is allowed to see: features and given
// labels only. Ground-truth fields stay with the metrics side.
struct TrainView {
    const Matrix* features = nullptr;
    const std::vector<int>* given_labels = nullptr;
    int class_count = 0;
};

TrainView make_train_view(const Dataset& ds);

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double global_threshold = 0.0;
    std::vector<double> local_thresholds;
    std::vector<double> class_expectation;
    int clean_count = 0;
    std::vector<int> clean_per_class;        // keyed by given label
    std::vector<int> noisy_count_per_class;  // keyed by corrected label, noisy subset
    std::vector<double> class_mean;          // correction state after the update
    std::vector<double> class_variance;
    std::vector<double> mean_weight;  // per corrected class, over all samples
    std::vector<double> min_weight;
    std::vector<double> max_weight;
    double loss_clean = 0.0;
    double loss_noisy = 0.0;
    double loss_reg = 0.0;
    // Filled by the observer (metrics side):
    double precision = 0.0;
    double recall = 0.0;
    std::vector<double> per_class_precision;
    double test_accuracy = 0.0;
};

// Handed to the observer after each epoch, before stats are archived.
struct EpochView {
    int epoch = 0;
    const Partition* partition = nullptr;
    const CorrectionPlan* plan = nullptr;
    const Mlp* student = nullptr;
    const Mlp* teacher = nullptr;
    EpochStats* stats = nullptr;
};

using EpochObserver = std::function<void(const EpochView&)>;

struct TrainResult {
    Mlp student;
    Mlp teacher;
    SgdMomentum opt;
    ThresholdState thresholds;
    CorrectionState correction;
    std::vector<EpochStats> epochs;
};

// Warm-up epochs train plain cross-entropy on given labels (weak views);
// afterwards each epoch probes the dataset, refreshes thresholds, partitions,
// builds the correction plan, and optimises the composite objective batch by
// batch with per-step teacher updates. Throws on non-finite loss.
TrainResult run_training(const TrainView& view, const TrainConfig& cfg,
                         const EpochObserver& observer = {});

// Loss terms of the composite objective, exposed for tests. clean_loss is the
// unweighted mean cross-entropy; corrected_loss the weighted one.
LossGrads clean_loss(const Mlp& student, const Matrix& views, std::span<const int> targets);
LossGrads corrected_loss(const Mlp& student, const Matrix& views, std::span<const int> targets,
                         std::span<const double> weights);

struct Checkpoint {
    Mlp student;
    Mlp teacher;
    SgdMomentum opt;
    ThresholdState thresholds;
    CorrectionState correction;
    int next_epoch = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace nlt
