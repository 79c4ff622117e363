#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nlt/reweight.hpp"
#include "nlt/rng.hpp"

using namespace nlt;

namespace {

// A net whose logits equal its inputs, so teacher argmax == row argmax.
Mlp identity_net(int dim) {
    Mlp m = init_mlp({dim, dim}, 0);
    std::fill(m.layers[0].weight.data.begin(), m.layers[0].weight.data.end(), 0.0);
    for (int i = 0; i < dim; ++i) m.layers[0].weight(i, i) = 1.0;
    return m;
}

}  // namespace

TEST_CASE("state initialises with mean 1/C and unit variance") {
    const CorrectionState s = CorrectionState::init(4, 0.99, 1.0);
    for (double m : s.mean) CHECK(m == doctest::Approx(0.25).epsilon(1e-15));
    for (double v : s.variance) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.epoch == 0);
}

TEST_CASE("correct_labels takes the teacher argmax with low-index ties") {
    const Mlp teacher = identity_net(3);
    Matrix x(2, 3);
    x(0, 0) = 0.1;
    x(0, 1) = 0.7;
    x(0, 2) = 0.2;
    x(1, 0) = 0.5;
    x(1, 1) = 0.5;
    x(1, 2) = 0.1;
    const auto labels = correct_labels(teacher, x);
    CHECK(labels[0] == 1);
    CHECK(labels[1] == 0);  // exact tie resolves to the lowest index
}

TEST_CASE("correct_labels matches a brute-force scan") {
    const int c = 7;
    const Mlp teacher = identity_net(c);
    Rng rng(41);
    Matrix x(1000, c);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (double& v : x.data) v = u(rng);
    const auto labels = correct_labels(teacher, x);
    for (std::size_t i = 0; i < x.rows; ++i) {
        int best = 0;
        for (int j = 1; j < c; ++j)
            if (x(i, j) > x(i, best)) best = j;
        CHECK(labels[i] == best);
    }
}

TEST_CASE("batch statistics are class-conditional") {
    const std::vector<double> conf = {0.8, 0.2, 0.4, 0.9};
    const std::vector<int> corrected = {2, 0, 0, 1};

    // Singleton class.
    {
        const std::vector<int> noisy = {0};
        const ClassStats s = batch_stats(conf, corrected, noisy, 3);
        CHECK(s.count[2] == 1);
        CHECK(s.mean[2] == doctest::Approx(0.8).epsilon(1e-15));
        CHECK(s.variance[2] == doctest::Approx(0.0).epsilon(1e-15));
    }
    // Two samples in class 0: mean 0.3, population variance 0.01.
    {
        const std::vector<int> noisy = {1, 2};
        const ClassStats s = batch_stats(conf, corrected, noisy, 3);
        CHECK(s.count[0] == 2);
        CHECK(s.mean[0] == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(s.variance[0] == doctest::Approx(0.01).epsilon(1e-12));
        CHECK(s.count[1] == 0);  // no evidence for class 1
        CHECK(s.count[2] == 0);
    }
}

TEST_CASE("distribution EMA updates and skip rule") {
    CorrectionState s = CorrectionState::init(4, 0.99, 1.0);
    ClassStats stats;
    stats.mean = {0.85, 0.0, 0.0, 0.0};
    stats.variance = {0.02, 0.0, 0.0, 0.0};
    stats.count = {3, 0, 0, 0};

    update_distribution(s, stats);  // epoch 0: untouched
    CHECK(s.mean[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(s.variance[0] == doctest::Approx(1.0).epsilon(1e-15));

    s.epoch = 1;
    update_distribution(s, stats);
    CHECK(s.mean[0] == doctest::Approx(0.256).epsilon(1e-12));
    CHECK(s.variance[0] == doctest::Approx(0.99 * 1.0 + 0.01 * 0.02).epsilon(1e-12));
    // Classes without evidence keep their previous values.
    CHECK(s.mean[1] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(s.variance[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("frozen statistics converge geometrically") {
    CorrectionState s = CorrectionState::init(2, 0.9, 1.0);
    s.epoch = 1;
    ClassStats stats;
    stats.mean = {0.7, 0.7};
    stats.variance = {0.05, 0.05};
    stats.count = {5, 5};
    double gap = std::abs(s.mean[0] - 0.7);
    for (int k = 0; k < 20; ++k) {
        update_distribution(s, stats);
        const double next = std::abs(s.mean[0] - 0.7);
        CHECK(next == doctest::Approx(gap * 0.9).epsilon(1e-9));
        gap = next;
    }
}

TEST_CASE("sample weight evaluates the gaussian tail") {
    CorrectionState s = CorrectionState::init(2, 0.99, 1.0);
    s.mean = {0.5, 0.5};
    s.variance = {0.01, 0.01};

    CHECK(sample_weight(0.5, 0, s) == doctest::Approx(1.0).epsilon(1e-15));  // plateau branch
    CHECK(sample_weight(0.7, 0, s) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(sample_weight(0.4, 0, s) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

    // Tiny confidence with a tight distribution: positive but tiny.
    s.variance = {1e-4, 1e-4};
    const double w = sample_weight(0.0, 0, s);
    CHECK(w > 0.0);
    CHECK(w < 1e-100);

    // The variance floor guards near-degenerate classes.
    s.variance = {0.0, 0.0};
    CHECK(sample_weight(0.4, 0, s) ==
          doctest::Approx(std::exp(-0.01 / (2.0 * kVarianceFloor))).epsilon(1e-9));
}

TEST_CASE("weight function properties on random triples") {
    Rng rng(55);
    std::uniform_real_distribution<double> cu(0.0, 1.0), mu(0.01, 1.0), vu(0.0, 0.5);
    CorrectionState s = CorrectionState::init(1, 0.99, 1.0);
    for (int t = 0; t < 20000; ++t) {
        s.mean[0] = mu(rng);
        s.variance[0] = vu(rng);
        const double c1 = cu(rng), c2 = cu(rng);
        const double w1 = sample_weight(std::min(c1, c2), 0, s);
        const double w2 = sample_weight(std::max(c1, c2), 0, s);
        CHECK(w1 > 0.0);
        CHECK(w1 <= 1.0);
        CHECK(w1 <= w2);  // monotone nondecreasing
        // Continuity at the mean.
        const double below = sample_weight(s.mean[0] - 1e-9, 0, s);
        CHECK(std::abs(below - 1.0) < 1e-9);
    }
}

TEST_CASE("build_plan corrects, fits and weights") {
    const int c = 3;
    const Mlp teacher = identity_net(c);
    Rng rng(66);
    Matrix x(40, c);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (double& v : x.data) v = u(rng);
    std::vector<int> given(40, 0);

    Mlp student = identity_net(c);
    const EpochProbe probe = probe_epoch(student, x, given);

    Partition part;
    for (int i = 0; i < 40; ++i) (i % 3 == 0 ? part.noisy : part.clean).push_back(i);

    CorrectionState state = CorrectionState::init(c, 0.99, 1.0);
    state.epoch = 1;
    const CorrectionState before = state;
    const CorrectionPlan plan = build_plan(probe, teacher, x, part, state);

    // Confidence is the student probability at the corrected label.
    for (std::size_t i = 0; i < 40; ++i)
        CHECK(plan.confidence[i] == doctest::Approx(probe.probs(i, plan.corrected_labels[i])).epsilon(1e-15));

    // Weights match a per-sample recomputation against the updated state.
    for (std::size_t i = 0; i < 40; ++i) {
        const double mu = state.mean[plan.corrected_labels[i]];
        const double var = std::max(state.variance[plan.corrected_labels[i]], kVarianceFloor);
        const double expect = plan.confidence[i] >= mu
                                  ? 1.0
                                  : std::exp(-(plan.confidence[i] - mu) * (plan.confidence[i] - mu) /
                                             (2.0 * var));
        CHECK(plan.weights[i] == doctest::Approx(expect).epsilon(1e-12));
        CHECK(plan.weights[i] > 0.0);
        CHECK(plan.weights[i] <= 1.0);
    }

    // The EMA moved for classes with evidence.
    ClassStats stats = batch_stats(plan.confidence, plan.corrected_labels, part.noisy, c);
    for (int k = 0; k < c; ++k) {
        if (stats.count[k] > 0)
            CHECK(state.mean[k] ==
                  doctest::Approx(0.99 * before.mean[k] + 0.01 * stats.mean[k]).epsilon(1e-12));
        else
            CHECK(state.mean[k] == before.mean[k]);
    }

    // Determinism: identical inputs give an identical plan.
    CorrectionState state2 = before;
    const CorrectionPlan plan2 = build_plan(probe, teacher, x, part, state2);
    CHECK(plan2.corrected_labels == plan.corrected_labels);
    CHECK(plan2.weights == plan.weights);

    // Empty noisy subset: state unchanged, weights from the prior state.
    Partition all_clean;
    for (int i = 0; i < 40; ++i) all_clean.clean.push_back(i);
    CorrectionState state3 = before;
    const CorrectionPlan plan3 = build_plan(probe, teacher, x, all_clean, state3);
    CHECK(state3.mean == before.mean);
    CHECK(state3.variance == before.variance);
    for (std::size_t i = 0; i < 40; ++i)
        CHECK(plan3.weights[i] ==
              doctest::Approx(sample_weight(plan3.confidence[i], plan3.corrected_labels[i], state3))
                  .epsilon(1e-15));
}

TEST_CASE("pooled statistics broadcast one distribution") {
    const std::vector<double> conf = {0.2, 0.4, 0.9};
    const std::vector<int> noisy = {0, 1, 2};
    const ClassStats s = pooled_stats(conf, noisy, 4);
    const double mean = 0.5;
    const double var = ((0.3 * 0.3) + (0.1 * 0.1) + (0.4 * 0.4)) / 3.0;
    for (int c = 0; c < 4; ++c) {
        CHECK(s.mean[c] == doctest::Approx(mean).epsilon(1e-12));
        CHECK(s.variance[c] == doctest::Approx(var).epsilon(1e-12));
        CHECK(s.count[c] == 3);
    }
}
