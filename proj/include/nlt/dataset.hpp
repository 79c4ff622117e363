#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlt/matrix.hpp"
#include "nlt/rng.hpp"

namespace nlt {

// Feature vectors with ground-truth and (possibly corrupted) given labels.
// Out-of-distribution rows carry true_labels[i] == class_count as a sentinel
// and is_ood[i] = 1; their given labels always stay inside [0, class_count).
struct Dataset {
    Matrix features;  // N x dim
    std::vector<int> true_labels;
    std::vector<int> given_labels;
    std::vector<std::uint8_t> is_ood;
    int class_count = 0;  // in-distribution classes

    std::size_t size() const { return features.rows; }
    std::size_t dim() const { return features.cols; }
};

enum class NoiseKind { symmetric, asymmetric, openset };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::symmetric;
    double rate = 0.2;                 // corruption rate on in-distribution labels, strictly in (0,1)
    int ood_class_count = 0;           // openset only: extra out-of-distribution blob classes
    std::optional<NoiseKind> id_kind;  // openset only: closed-set corruption for in-distribution rows
};

void validate(const NoiseSpec& spec);

// Gaussian clusters with per-class standard deviation spread[c]. Class means
// sit on a hypersphere scaled so neighbouring means stay a fixed chord apart
// (a line grid when dim == 1). Rows are grouped by class; given == true labels.
Dataset generate_blobs(int class_count, int per_class, int dim, const std::vector<double>& spread,
                       std::uint64_t seed);

// Corrupts given labels in place of a fresh dataset (given == true required).
// symmetric: flip to a uniformly random other class with prob rate.
// asymmetric: flip to (true + 1) mod C with prob rate.
// openset: append ood_class_count extra blob classes with random in-distribution
// given labels, then corrupt the in-distribution rows per id_kind/rate.
Dataset inject_noise(const Dataset& ds, const NoiseSpec& spec, std::uint64_t seed);

enum class AugmentStrength { weak, strong };

inline constexpr double kWeakJitter = 0.05;   // fraction of per-dimension std
inline constexpr double kStrongJitter = 0.25;
inline constexpr double kMaskProb = 0.1;      // strong: per-coordinate zero-mask prob

// Per-dimension population standard deviation of the feature columns.
std::vector<double> feature_std(const Matrix& features);

// weak: additive Gaussian jitter scaled by stats; strong: larger jitter
// followed by independent zero-masking of each coordinate.
std::vector<double> augment(std::span<const double> x, AugmentStrength strength,
                            const std::vector<double>& stats, Rng& rng);
void augment_row(const double* x, double* out, std::size_t dim, AugmentStrength strength,
                 const std::vector<double>& stats, Rng& rng);

// Columnar CSV (header f0..f{d-1},true_label,given_label,is_ood) and a compact
// versioned little-endian binary form.
void save_csv(const Dataset& ds, const std::string& path);
Dataset load_csv(const std::string& path);
void save_binary(const Dataset& ds, const std::string& path);
Dataset load_binary(const std::string& path);

}  // namespace nlt
