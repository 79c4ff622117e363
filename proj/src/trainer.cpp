#include "nlt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "nlt/error.hpp"
#include "nlt/rng.hpp"

namespace nlt {

void validate(const TrainConfig& cfg) {
    if (cfg.total_epochs < 1) throw ConfigError("train.total_epochs must be at least 1");
    if (cfg.warmup_epochs < 0 || cfg.warmup_epochs >= cfg.total_epochs)
        throw ConfigError("train.warmup_epochs must satisfy 0 <= warmup < total_epochs");
    if (cfg.batch_size < 1) throw ConfigError("train.batch_size must be at least 1");
    if (!(cfg.base_lr > 0.0)) throw ConfigError("train.base_lr must be positive");
    if (cfg.weight_decay < 0.0) throw ConfigError("train.weight_decay must be nonnegative");
    if (!(cfg.ema_momentum >= 0.0 && cfg.ema_momentum < 1.0))
        throw ConfigError("train.ema_momentum must lie in [0,1)");
    if (!(cfg.teacher_alpha >= 0.0 && cfg.teacher_alpha <= 1.0))
        throw ConfigError("train.teacher_alpha must lie in [0,1]");
    if (!(cfg.weight_cap > 0.0)) throw ConfigError("train.weight_cap must be positive");
    if (cfg.hidden_dims.empty()) throw ConfigError("train.hidden must name at least one layer");
    for (int h : cfg.hidden_dims)
        if (h < 1) throw ConfigError("train.hidden sizes must be positive");
    if (cfg.save_every < 0) throw ConfigError("train.save_every must be nonnegative");
}

TrainView make_train_view(const Dataset& ds) {
    return TrainView{&ds.features, &ds.given_labels, ds.class_count};
}

LossGrads clean_loss(const Mlp& student, const Matrix& views, std::span<const int> targets) {
    const std::vector<double> unit(views.rows, 1.0);
    return loss_and_grads(student, views, targets, unit, 0.0);
}

LossGrads corrected_loss(const Mlp& student, const Matrix& views, std::span<const int> targets,
                         std::span<const double> weights) {
    return loss_and_grads(student, views, targets, weights, 0.0);
}

namespace {

Mlp zeros_like(const Mlp& params) {
    Mlp g;
    g.layers.resize(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        g.layers[l].weight = Matrix(params.layers[l].weight.rows, params.layers[l].weight.cols);
        g.layers[l].bias.assign(params.layers[l].bias.size(), 0.0);
    }
    return g;
}

void add_grads(Mlp& acc, const Mlp& more) {
    for (std::size_t l = 0; l < acc.layers.size(); ++l) {
        for (std::size_t k = 0; k < acc.layers[l].weight.data.size(); ++k)
            acc.layers[l].weight.data[k] += more.layers[l].weight.data[k];
        for (std::size_t k = 0; k < acc.layers[l].bias.size(); ++k)
            acc.layers[l].bias[k] += more.layers[l].bias[k];
    }
}

void add_weight_decay(Mlp& grads, const Mlp& params, double wd) {
    if (wd == 0.0) return;
    for (std::size_t l = 0; l < params.layers.size(); ++l)
        for (std::size_t k = 0; k < params.layers[l].weight.data.size(); ++k)
            grads.layers[l].weight.data[k] += wd * params.layers[l].weight.data[k];
}

Matrix augment_rows(const Matrix& features, std::span<const int> rows, AugmentStrength strength,
                    const std::vector<double>& stats, Rng& rng) {
    Matrix out(rows.size(), features.cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        augment_row(features.row(rows[i]), out.row(i), features.cols, strength, stats, rng);
    return out;
}

struct WeightSummary {
    std::vector<double> mean, lo, hi;
};

// Per corrected-class weight summary over all samples; classes with no
// samples report the plateau value (the cap).
WeightSummary summarise_weights(const CorrectionPlan& plan, int class_count, double cap) {
    WeightSummary s;
    s.mean.assign(class_count, 0.0);
    s.lo.assign(class_count, 0.0);
    s.hi.assign(class_count, 0.0);
    std::vector<int> counts(class_count, 0);
    for (std::size_t i = 0; i < plan.weights.size(); ++i) {
        const int c = plan.corrected_labels[i];
        const double w = plan.weights[i];
        if (counts[c] == 0) {
            s.lo[c] = s.hi[c] = w;
        } else {
            s.lo[c] = std::min(s.lo[c], w);
            s.hi[c] = std::max(s.hi[c], w);
        }
        s.mean[c] += w;
        ++counts[c];
    }
    for (int c = 0; c < class_count; ++c) {
        if (counts[c] > 0)
            s.mean[c] /= counts[c];
        else
            s.mean[c] = s.lo[c] = s.hi[c] = cap;
    }
    return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    os.write("NLTCKPT1", 8);
    const std::uint32_t version = 1;
    os.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::int32_t next = ck.next_epoch;
    os.write(reinterpret_cast<const char*>(&next), sizeof(next));
    write_mlp(os, ck.student);
    write_mlp(os, ck.teacher);
    Mlp vel;
    vel.layers = ck.opt.velocity;
    write_mlp(os, vel);

    auto write_d = [&os](double v) { os.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
    auto write_vec = [&os, &write_d](const std::vector<double>& v) {
        const std::uint64_t n = v.size();
        os.write(reinterpret_cast<const char*>(&n), sizeof(n));
        for (double x : v) write_d(x);
    };
    write_d(ck.opt.momentum);
    write_d(ck.opt.base_lr);
    write_d(ck.opt.weight_decay);
    write_d(ck.thresholds.global_threshold);
    write_vec(ck.thresholds.class_expectation);
    write_d(ck.thresholds.ema_momentum);
    const std::int32_t tepoch = ck.thresholds.epoch;
    os.write(reinterpret_cast<const char*>(&tepoch), sizeof(tepoch));
    write_vec(ck.correction.mean);
    write_vec(ck.correction.variance);
    write_d(ck.correction.ema_momentum);
    write_d(ck.correction.weight_cap);
    const std::int32_t cepoch = ck.correction.epoch;
    os.write(reinterpret_cast<const char*>(&cepoch), sizeof(cepoch));
    if (!os) throw ConfigError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, "NLTCKPT1", 8) != 0)
        throw ConfigError(path + ": not a checkpoint file (bad magic)");
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != 1) throw ConfigError(path + ": unsupported checkpoint version");
    Checkpoint ck;
    std::int32_t next = 0;
    is.read(reinterpret_cast<char*>(&next), sizeof(next));
    ck.next_epoch = next;
    ck.student = read_mlp(is);
    ck.teacher = read_mlp(is);
    ck.opt.velocity = read_mlp(is).layers;

    auto read_d = [&is]() {
        double v = 0.0;
        is.read(reinterpret_cast<char*>(&v), sizeof(v));
        return v;
    };
    auto read_vec = [&is, &read_d]() {
        std::uint64_t n = 0;
        is.read(reinterpret_cast<char*>(&n), sizeof(n));
        std::vector<double> v(n);
        for (std::uint64_t i = 0; i < n; ++i) v[i] = read_d();
        return v;
    };
    ck.opt.momentum = read_d();
    ck.opt.base_lr = read_d();
    ck.opt.weight_decay = read_d();
    ck.thresholds.global_threshold = read_d();
    ck.thresholds.class_expectation = read_vec();
    ck.thresholds.ema_momentum = read_d();
    std::int32_t tepoch = 0;
    is.read(reinterpret_cast<char*>(&tepoch), sizeof(tepoch));
    ck.thresholds.epoch = tepoch;
    ck.correction.mean = read_vec();
    ck.correction.variance = read_vec();
    ck.correction.ema_momentum = read_d();
    ck.correction.weight_cap = read_d();
    std::int32_t cepoch = 0;
    is.read(reinterpret_cast<char*>(&cepoch), sizeof(cepoch));
    ck.correction.epoch = cepoch;
    if (!is) throw ConfigError(path + ": truncated checkpoint");
    return ck;
}

TrainResult run_training(const TrainView& view, const TrainConfig& cfg, const EpochObserver& observer) {
    validate(cfg);
    const Matrix& features = *view.features;
    const std::vector<int>& given = *view.given_labels;
    const int class_count = view.class_count;
    const std::size_t n = features.rows;
    if (n == 0 || given.size() != n) throw ConfigError("training view is empty or inconsistent");

    std::vector<int> dims;
    dims.push_back(static_cast<int>(features.cols));
    dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
    dims.push_back(class_count);

    TrainResult result;
    int start_epoch = 0;
    if (!cfg.resume_path.empty()) {
        Checkpoint ck = load_checkpoint(cfg.resume_path);
        if (ck.student.input_dim() != features.cols || ck.student.output_dim() != static_cast<std::size_t>(class_count))
            throw ConfigError("checkpoint shape does not match the configured model");
        result.student = std::move(ck.student);
        result.teacher = std::move(ck.teacher);
        result.opt = std::move(ck.opt);
        result.thresholds = std::move(ck.thresholds);
        result.correction = std::move(ck.correction);
        start_epoch = ck.next_epoch;
    } else {
        result.student = init_mlp(dims, derive_seed(cfg.seed, Stream::model_init));
        result.teacher = result.student;  // teacher starts from the initial student
        result.opt = init_sgd(result.student, cfg.base_lr, cfg.weight_decay);
        result.thresholds =
            ThresholdState::init(class_count, cfg.ablation.no_threshold_ema ? 0.0 : cfg.ema_momentum);
        result.correction = CorrectionState::init(
            class_count, cfg.ablation.no_distribution_ema ? 0.0 : cfg.ema_momentum, cfg.weight_cap);
    }

    const std::vector<double> stats = feature_std(features);
    for (double s : stats)
        if (!(s > 0.0)) throw ConfigError("training features have a degenerate dimension");

    std::vector<int> order(n);

    for (int epoch = start_epoch; epoch < cfg.total_epochs; ++epoch) {
        // Epoch-start pipeline: probe, thresholds, partition, correction plan.
        const EpochProbe probe = probe_epoch(result.student, features, given);
        update_global_threshold(result.thresholds, probe);
        update_class_expectations(result.thresholds, probe);

        const double bar = cfg.ablation.no_global_threshold ? 1.0 / class_count
                                                            : result.thresholds.global_threshold;
        std::vector<double> local;
        if (cfg.ablation.no_local_threshold)
            local.assign(class_count, bar);
        else
            local = local_thresholds(result.thresholds, bar);

        Partition part;
        if (cfg.ablation.no_selection) {
            part.clean.resize(n);
            std::iota(part.clean.begin(), part.clean.end(), 0);
        } else {
            part = make_partition(probe, given, local);
        }

        PlanOptions plan_opts;
        plan_opts.pooled_stats = cfg.ablation.no_class_balance;
        CorrectionPlan plan = build_plan(probe, result.teacher, features, part, result.correction, plan_opts);
        if (cfg.ablation.no_reweight)
            std::fill(plan.weights.begin(), plan.weights.end(), cfg.weight_cap);

        ++result.thresholds.epoch;
        ++result.correction.epoch;

        const double lr = cosine_lr(epoch, cfg.total_epochs, cfg.base_lr);
        // Per-epoch streams so a resumed run replays the exact same batches.
        Rng shuffle_rng = make_rng(cfg.seed, Stream::shuffle, static_cast<std::uint64_t>(epoch));
        Rng augment_rng = make_rng(cfg.seed, Stream::augment, static_cast<std::uint64_t>(epoch));
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        std::vector<std::uint8_t> selected(n, 0);
        for (int i : part.clean) selected[i] = 1;

        const bool plain = epoch < cfg.warmup_epochs || cfg.ablation.no_selection;
        double sum_clean = 0.0, sum_noisy = 0.0, sum_reg = 0.0;
        std::size_t cnt_clean = 0, cnt_noisy = 0, cnt_reg = 0;

        for (std::size_t batch_start = 0, batch_index = 0; batch_start < n;
             batch_start += cfg.batch_size, ++batch_index) {
            const std::size_t batch_end = std::min(n, batch_start + cfg.batch_size);
            std::span<const int> batch(order.data() + batch_start, batch_end - batch_start);

            Mlp grads = zeros_like(result.student);
            double batch_loss = 0.0;

            if (plain) {
                const Matrix views = augment_rows(features, batch, AugmentStrength::weak, stats, augment_rng);
                std::vector<int> targets(batch.size());
                for (std::size_t i = 0; i < batch.size(); ++i) targets[i] = given[batch[i]];
                LossGrads lg = clean_loss(result.student, views, targets);
                batch_loss = lg.loss;
                add_grads(grads, lg.grads);
                sum_clean += lg.loss * static_cast<double>(batch.size());
                cnt_clean += batch.size();
            } else {
                std::vector<int> bc, bn;
                for (int i : batch) (selected[i] ? bc : bn).push_back(i);

                if (!bc.empty()) {
                    const Matrix views = augment_rows(features, bc, AugmentStrength::weak, stats, augment_rng);
                    std::vector<int> targets(bc.size());
                    for (std::size_t i = 0; i < bc.size(); ++i) targets[i] = given[bc[i]];
                    LossGrads lg = clean_loss(result.student, views, targets);
                    batch_loss += lg.loss;
                    add_grads(grads, lg.grads);
                    sum_clean += lg.loss * static_cast<double>(bc.size());
                    cnt_clean += bc.size();
                }
                if (!cfg.ablation.no_noisy_loss && !bn.empty()) {
                    const Matrix views = augment_rows(features, bn, AugmentStrength::strong, stats, augment_rng);
                    std::vector<int> targets(bn.size());
                    std::vector<double> w(bn.size());
                    for (std::size_t i = 0; i < bn.size(); ++i) {
                        targets[i] = plan.corrected_labels[bn[i]];
                        w[i] = plan.weights[bn[i]];
                    }
                    LossGrads lg = corrected_loss(result.student, views, targets, w);
                    batch_loss += lg.loss;
                    add_grads(grads, lg.grads);
                    sum_noisy += lg.loss * static_cast<double>(bn.size());
                    cnt_noisy += bn.size();
                }
                if (!cfg.ablation.no_consistency && !bc.empty()) {
                    const Matrix views = augment_rows(features, bc, AugmentStrength::strong, stats, augment_rng);
                    std::vector<int> targets(bc.size());
                    std::vector<double> w(bc.size());
                    for (std::size_t i = 0; i < bc.size(); ++i) {
                        targets[i] = plan.corrected_labels[bc[i]];
                        w[i] = plan.weights[bc[i]];
                    }
                    LossGrads lg = corrected_loss(result.student, views, targets, w);
                    batch_loss += lg.loss;
                    add_grads(grads, lg.grads);
                    sum_reg += lg.loss * static_cast<double>(bc.size());
                    cnt_reg += bc.size();
                }
            }

            if (!std::isfinite(batch_loss))
                throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batch_index));

            add_weight_decay(grads, result.student, cfg.weight_decay);
            sgd_step(result.opt, result.student, grads, lr);
            teacher_update(result.teacher, result.student, cfg.teacher_alpha);
        }

        EpochStats stats_row;
        stats_row.epoch = epoch;
        stats_row.lr = lr;
        stats_row.global_threshold = result.thresholds.global_threshold;
        stats_row.local_thresholds = local;
        stats_row.class_expectation = result.thresholds.class_expectation;
        stats_row.clean_count = static_cast<int>(part.clean.size());
        stats_row.clean_per_class.assign(class_count, 0);
        for (int i : part.clean) ++stats_row.clean_per_class[given[i]];
        stats_row.noisy_count_per_class.assign(class_count, 0);
        for (int i : part.noisy) ++stats_row.noisy_count_per_class[plan.corrected_labels[i]];
        stats_row.class_mean = result.correction.mean;
        stats_row.class_variance = result.correction.variance;
        WeightSummary ws = summarise_weights(plan, class_count, cfg.weight_cap);
        stats_row.mean_weight = std::move(ws.mean);
        stats_row.min_weight = std::move(ws.lo);
        stats_row.max_weight = std::move(ws.hi);
        stats_row.loss_clean = cnt_clean ? sum_clean / static_cast<double>(cnt_clean) : 0.0;
        stats_row.loss_noisy = cnt_noisy ? sum_noisy / static_cast<double>(cnt_noisy) : 0.0;
        stats_row.loss_reg = cnt_reg ? sum_reg / static_cast<double>(cnt_reg) : 0.0;

        if (observer) {
            EpochView ev;
            ev.epoch = epoch;
            ev.partition = &part;
            ev.plan = &plan;
            ev.student = &result.student;
            ev.teacher = &result.teacher;
            ev.stats = &stats_row;
            observer(ev);
        }
        result.epochs.push_back(std::move(stats_row));

        if (cfg.save_every > 0 && !cfg.checkpoint_path.empty() &&
            ((epoch + 1) % cfg.save_every == 0 || epoch + 1 == cfg.total_epochs)) {
            Checkpoint ck{result.student, result.teacher, result.opt,
                          result.thresholds, result.correction, epoch + 1};
            save_checkpoint(cfg.checkpoint_path, ck);
        }
    }
    return result;
}

}  // namespace nlt
