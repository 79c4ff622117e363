#include "nlt/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

#include "nlt/error.hpp"
#include "nlt/rng.hpp"

namespace nlt {

Mlp init_mlp(const std::vector<int>& dims, std::uint64_t seed) {
    if (dims.size() < 2) throw ConfigError("model needs at least input and output dimensions");
    for (int d : dims)
        if (d < 1) throw ConfigError("model layer sizes must be positive");

    Mlp m;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-limit, limit);
        Layer layer;
        layer.weight = Matrix(fan_out, fan_in);
        for (double& w : layer.weight.data) w = u(rng);
        layer.bias.assign(fan_out, 0.0);
        m.layers.push_back(std::move(layer));
    }
    return m;
}

SgdMomentum init_sgd(const Mlp& params, double base_lr, double weight_decay) {
    SgdMomentum opt;
    opt.base_lr = base_lr;
    opt.weight_decay = weight_decay;
    for (const Layer& l : params.layers) {
        Layer v;
        v.weight = Matrix(l.weight.rows, l.weight.cols);
        v.bias.assign(l.bias.size(), 0.0);
        opt.velocity.push_back(std::move(v));
    }
    return opt;
}

namespace {

// z = a * W^T + b, row-major dot products.
Matrix affine(const Matrix& a, const Layer& l) {
    Matrix z(a.rows, l.weight.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* zi = z.row(i);
        for (std::size_t j = 0; j < l.weight.rows; ++j) {
            const double* wj = l.weight.row(j);
            double acc = l.bias[j];
            for (std::size_t k = 0; k < l.weight.cols; ++k) acc += ai[k] * wj[k];
            zi[j] = acc;
        }
    }
    return z;
}

void relu_inplace(Matrix& z) {
    for (double& v : z.data) v = v > 0.0 ? v : 0.0;
}

}  // namespace

Matrix forward(const Mlp& params, const Matrix& batch) {
    if (batch.cols != params.input_dim())
        throw std::invalid_argument("forward: batch width does not match the model input");
    Matrix a = batch;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        a = affine(a, params.layers[l]);
        if (l + 1 < params.layers.size()) relu_inplace(a);
    }
    return a;
}

Matrix softmax_probs(const Matrix& logits) {
    Matrix p(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double* z = logits.row(i);
        double* pi = p.row(i);
        double zmax = z[0];
        for (std::size_t c = 1; c < logits.cols; ++c) zmax = std::max(zmax, z[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.cols; ++c) {
            pi[c] = std::exp(z[c] - zmax);
            sum += pi[c];
        }
        const double inv = 1.0 / sum;
        for (std::size_t c = 0; c < logits.cols; ++c) pi[c] *= inv;
    }
    return p;
}

LossGrads loss_and_grads(const Mlp& params, const Matrix& batch, std::span<const int> targets,
                         std::span<const double> weights, double weight_decay) {
    const std::size_t b = batch.rows;
    if (targets.size() != b || weights.size() != b)
        throw std::invalid_argument("loss_and_grads: targets/weights must match the batch");

    // Forward pass keeping activations for the backward sweep.
    std::vector<Matrix> acts;  // acts[0] = input, acts[l+1] = layer l output
    acts.reserve(params.layers.size() + 1);
    acts.push_back(batch);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        Matrix z = affine(acts.back(), params.layers[l]);
        if (l + 1 < params.layers.size()) relu_inplace(z);
        acts.push_back(std::move(z));
    }
    const Matrix probs = softmax_probs(acts.back());

    LossGrads out;
    out.grads.layers.resize(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        out.grads.layers[l].weight = Matrix(params.layers[l].weight.rows, params.layers[l].weight.cols);
        out.grads.layers[l].bias.assign(params.layers[l].bias.size(), 0.0);
    }

    double loss = 0.0;
    Matrix delta(b, probs.cols);  // dL/dlogits
    const double inv_b = b > 0 ? 1.0 / static_cast<double>(b) : 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const int t = targets[i];
        if (t < 0 || static_cast<std::size_t>(t) >= probs.cols)
            throw std::invalid_argument("loss_and_grads: target class out of range");
        const double w = weights[i];
        loss -= w * std::log(std::max(probs(i, t), kProbFloor));
        const double* pi = probs.row(i);
        double* di = delta.row(i);
        const double scale = w * inv_b;
        for (std::size_t c = 0; c < probs.cols; ++c) di[c] = scale * pi[c];
        di[t] -= scale;
    }
    out.loss = loss * inv_b;

    // Backward sweep.
    for (std::size_t li = params.layers.size(); li-- > 0;) {
        const Matrix& input = acts[li];
        Layer& g = out.grads.layers[li];
        for (std::size_t i = 0; i < b; ++i) {
            const double* di = delta.row(i);
            const double* xi = input.row(i);
            for (std::size_t j = 0; j < g.weight.rows; ++j) {
                const double dj = di[j];
                if (dj == 0.0) continue;
                g.bias[j] += dj;
                double* gj = g.weight.row(j);
                for (std::size_t k = 0; k < g.weight.cols; ++k) gj[k] += dj * xi[k];
            }
        }
        if (li > 0) {
            const Layer& layer = params.layers[li];
            Matrix prev(b, layer.weight.cols);
            for (std::size_t i = 0; i < b; ++i) {
                const double* di = delta.row(i);
                double* pi = prev.row(i);
                for (std::size_t j = 0; j < layer.weight.rows; ++j) {
                    const double dj = di[j];
                    if (dj == 0.0) continue;
                    const double* wj = layer.weight.row(j);
                    for (std::size_t k = 0; k < layer.weight.cols; ++k) pi[k] += dj * wj[k];
                }
                // Rectifier gate of the producing layer.
                const double* zi = acts[li].row(i);
                for (std::size_t k = 0; k < layer.weight.cols; ++k)
                    if (zi[k] <= 0.0) pi[k] = 0.0;
            }
            delta = std::move(prev);
        }
    }

    if (weight_decay != 0.0) {
        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            const Matrix& w = params.layers[l].weight;
            Matrix& gw = out.grads.layers[l].weight;
            for (std::size_t k = 0; k < w.data.size(); ++k) gw.data[k] += weight_decay * w.data[k];
        }
    }
    return out;
}

void sgd_step(SgdMomentum& opt, Mlp& params, const Mlp& grads, double lr) {
    if (opt.velocity.size() != params.layers.size() || grads.layers.size() != params.layers.size())
        throw std::invalid_argument("sgd_step: shape mismatch");
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        Layer& v = opt.velocity[l];
        Layer& p = params.layers[l];
        const Layer& g = grads.layers[l];
        for (std::size_t k = 0; k < p.weight.data.size(); ++k) {
            v.weight.data[k] = opt.momentum * v.weight.data[k] + g.weight.data[k];
            p.weight.data[k] -= lr * v.weight.data[k];
        }
        for (std::size_t k = 0; k < p.bias.size(); ++k) {
            v.bias[k] = opt.momentum * v.bias[k] + g.bias[k];
            p.bias[k] -= lr * v.bias[k];
        }
    }
}

double cosine_lr(int epoch, int total_epochs, double base_lr) {
    if (epoch < 0 || epoch >= total_epochs)
        throw std::invalid_argument("cosine_lr: epoch out of range");
    return base_lr * 0.5 *
           (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) / total_epochs));
}

void teacher_update(Mlp& teacher, const Mlp& student, double alpha) {
    if (teacher.layers.size() != student.layers.size())
        throw std::invalid_argument("teacher_update: shape mismatch");
    for (std::size_t l = 0; l < teacher.layers.size(); ++l) {
        Layer& t = teacher.layers[l];
        const Layer& s = student.layers[l];
        for (std::size_t k = 0; k < t.weight.data.size(); ++k)
            t.weight.data[k] = alpha * t.weight.data[k] + (1.0 - alpha) * s.weight.data[k];
        for (std::size_t k = 0; k < t.bias.size(); ++k)
            t.bias[k] = alpha * t.bias[k] + (1.0 - alpha) * s.bias[k];
    }
}

void write_mlp(std::ostream& os, const Mlp& m) {
    const std::uint32_t layers = static_cast<std::uint32_t>(m.layers.size());
    os.write(reinterpret_cast<const char*>(&layers), sizeof(layers));
    for (const Layer& l : m.layers) {
        const std::uint64_t rows = l.weight.rows, cols = l.weight.cols;
        os.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
        os.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
        os.write(reinterpret_cast<const char*>(l.weight.data.data()),
                 static_cast<std::streamsize>(l.weight.data.size() * sizeof(double)));
        os.write(reinterpret_cast<const char*>(l.bias.data()),
                 static_cast<std::streamsize>(l.bias.size() * sizeof(double)));
    }
}

Mlp read_mlp(std::istream& is) {
    std::uint32_t layers = 0;
    is.read(reinterpret_cast<char*>(&layers), sizeof(layers));
    if (!is || layers == 0 || layers > 64) throw ConfigError("corrupt model record");
    Mlp m;
    for (std::uint32_t l = 0; l < layers; ++l) {
        std::uint64_t rows = 0, cols = 0;
        is.read(reinterpret_cast<char*>(&rows), sizeof(rows));
        is.read(reinterpret_cast<char*>(&cols), sizeof(cols));
        if (!is || rows == 0 || cols == 0) throw ConfigError("corrupt model record");
        Layer layer;
        layer.weight = Matrix(rows, cols);
        layer.bias.assign(rows, 0.0);
        is.read(reinterpret_cast<char*>(layer.weight.data.data()),
                static_cast<std::streamsize>(layer.weight.data.size() * sizeof(double)));
        is.read(reinterpret_cast<char*>(layer.bias.data()),
                static_cast<std::streamsize>(layer.bias.size() * sizeof(double)));
        if (!is) throw ConfigError("corrupt model record");
        m.layers.push_back(std::move(layer));
    }
    return m;
}

}  // namespace nlt
