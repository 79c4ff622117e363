#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "nlt/matrix.hpp"

namespace nlt {

struct Layer {
    Matrix weight;             // out x in
    std::vector<double> bias;  // out
};

// Fully-connected net: rectifier on hidden layers, identity on the output.
// Gradients are hand-derived for this fixed family.
struct Mlp {
    std::vector<Layer> layers;

    std::size_t input_dim() const { return layers.front().weight.cols; }
    std::size_t output_dim() const { return layers.back().weight.rows; }
};

struct SgdMomentum {
    std::vector<Layer> velocity;  // mirrors the parameter shapes
    double momentum = 0.9;
    double base_lr = 0.05;
    double weight_decay = 5e-4;
};

// Probabilities are clamped below at this floor before any log.
inline constexpr double kProbFloor = 1e-12;

// Weights drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
Mlp init_mlp(const std::vector<int>& dims, std::uint64_t seed);
SgdMomentum init_sgd(const Mlp& params, double base_lr, double weight_decay);

Matrix forward(const Mlp& params, const Matrix& batch);
Matrix softmax_probs(const Matrix& logits);  // max-subtraction stabilised

struct LossGrads {
    double loss = 0.0;
    Mlp grads;
};

// loss = -(1/B) sum_i weights[i] * log p[i][targets[i]]. Weight decay enters
// the gradients only (weights, not biases); the clamp is not differentiated.
LossGrads loss_and_grads(const Mlp& params, const Matrix& batch, std::span<const int> targets,
                         std::span<const double> weights, double weight_decay);

// velocity <- momentum * velocity + grads; params <- params - lr * velocity.
void sgd_step(SgdMomentum& opt, Mlp& params, const Mlp& grads, double lr);

double cosine_lr(int epoch, int total_epochs, double base_lr);

// teacher <- alpha * teacher + (1 - alpha) * student, every parameter.
void teacher_update(Mlp& teacher, const Mlp& student, double alpha);

void write_mlp(std::ostream& os, const Mlp& m);
Mlp read_mlp(std::istream& is);

}  // namespace nlt
