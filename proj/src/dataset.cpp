#include "nlt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "nlt/error.hpp"

namespace nlt {

void validate(const NoiseSpec& spec) {
    if (!(spec.rate > 0.0 && spec.rate < 1.0))
        throw ConfigError("noise.rate must lie strictly inside (0,1)");
    if (spec.kind == NoiseKind::openset) {
        if (spec.ood_class_count <= 0)
            throw ConfigError("noise.ood_classes must be positive for openset noise");
        if (!spec.id_kind.has_value())
            throw ConfigError("noise.id_kind is required for openset noise");
        if (*spec.id_kind == NoiseKind::openset)
            throw ConfigError("noise.id_kind must be symmetric or asymmetric");
    } else if (spec.ood_class_count != 0) {
        throw ConfigError("noise.ood_classes must be zero for closed-set noise");
    }
}

namespace {

// Class means sit a fixed chord apart: on a circle in the first two
// coordinates for dim >= 2, on a line grid for dim == 1.
constexpr double kMeanSpacing = 6.0;

std::vector<double> class_mean(int cls, int class_count, int dim, double angle_offset, double radius_scale) {
    std::vector<double> mean(static_cast<std::size_t>(dim), 0.0);
    if (dim == 1) {
        mean[0] = kMeanSpacing * (cls + angle_offset) * radius_scale;
        return mean;
    }
    const double radius =
        radius_scale * kMeanSpacing / (2.0 * std::sin(std::numbers::pi / class_count));
    const double theta = 2.0 * std::numbers::pi * (cls + angle_offset) / class_count;
    mean[0] = radius * std::cos(theta);
    mean[1] = radius * std::sin(theta);
    return mean;
}

void fill_blob_rows(Matrix& features, std::size_t first_row, int rows, const std::vector<double>& mean,
                    double sigma, Rng& rng) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (int r = 0; r < rows; ++r) {
        double* row = features.row(first_row + r);
        for (std::size_t k = 0; k < mean.size(); ++k) row[k] = mean[k] + noise(rng);
    }
}

int flipped_label(NoiseKind kind, int true_label, int class_count, Rng& rng) {
    if (kind == NoiseKind::asymmetric) return (true_label + 1) % class_count;
    std::uniform_int_distribution<int> other(0, class_count - 2);
    int k = other(rng);
    return k >= true_label ? k + 1 : k;
}

}  // namespace

Dataset generate_blobs(int class_count, int per_class, int dim, const std::vector<double>& spread,
                       std::uint64_t seed) {
    if (class_count < 2) throw ConfigError("data.classes must be at least 2");
    if (per_class < 1) throw ConfigError("data.per_class must be at least 1");
    if (dim < 1) throw ConfigError("data.dim must be at least 1");
    if (spread.size() != static_cast<std::size_t>(class_count))
        throw ConfigError("data.spread must list one value per class");
    for (double s : spread)
        if (!(s > 0.0)) throw ConfigError("data.spread values must be positive");

    const std::size_t n = static_cast<std::size_t>(class_count) * per_class;
    Dataset ds;
    ds.class_count = class_count;
    ds.features = Matrix(n, static_cast<std::size_t>(dim));
    ds.true_labels.resize(n);
    ds.given_labels.resize(n);
    ds.is_ood.assign(n, 0);

    Rng rng(seed);
    for (int c = 0; c < class_count; ++c) {
        const auto mean = class_mean(c, class_count, dim, 0.0, 1.0);
        const std::size_t first = static_cast<std::size_t>(c) * per_class;
        fill_blob_rows(ds.features, first, per_class, mean, spread[c], rng);
        std::fill_n(ds.true_labels.begin() + first, per_class, c);
        std::fill_n(ds.given_labels.begin() + first, per_class, c);
    }
    return ds;
}

Dataset inject_noise(const Dataset& ds, const NoiseSpec& spec, std::uint64_t seed) {
    validate(spec);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.given_labels[i] != ds.true_labels[i] || ds.is_ood[i])
            throw ConfigError("inject_noise expects a fresh dataset (noise applied once)");
    }

    Dataset out = ds;
    const int c = ds.class_count;
    const std::size_t n_id = ds.size();

    if (spec.kind == NoiseKind::openset) {
        // Extra blob classes with means outside the in-distribution hull.
        double max_norm = 0.0;
        for (std::size_t i = 0; i < n_id; ++i) {
            double sq = 0.0;
            const double* row = ds.features.row(i);
            for (std::size_t k = 0; k < ds.dim(); ++k) sq += row[k] * row[k];
            max_norm = std::max(max_norm, std::sqrt(sq));
        }
        const int per_class = static_cast<int>(n_id) / c > 0 ? static_cast<int>(n_id) / c : 1;
        const std::size_t n_ood = static_cast<std::size_t>(spec.ood_class_count) * per_class;

        out.features = Matrix(n_id + n_ood, ds.dim());
        std::copy(ds.features.data.begin(), ds.features.data.end(), out.features.data.begin());
        out.true_labels.resize(n_id + n_ood);
        out.given_labels.resize(n_id + n_ood);
        out.is_ood.resize(n_id + n_ood);

        Rng ood_rng(derive_seed(seed, Stream::ood_blobs));
        std::uniform_int_distribution<int> any_class(0, c - 1);
        const double target = 2.0 * max_norm + kMeanSpacing;
        for (int k = 0; k < spec.ood_class_count; ++k) {
            auto mean = class_mean(k, spec.ood_class_count, static_cast<int>(ds.dim()), 0.5, 1.0);
            if (ds.dim() == 1) {
                mean[0] = target + kMeanSpacing * k;
            } else {
                // Rescale onto a ring strictly outside every in-distribution point.
                double norm = 0.0;
                for (double v : mean) norm += v * v;
                norm = std::sqrt(norm);
                for (double& v : mean) v = norm > 0.0 ? v / norm * target : target;
            }
            const std::size_t first = n_id + static_cast<std::size_t>(k) * per_class;
            fill_blob_rows(out.features, first, per_class, mean, 1.0, ood_rng);
            for (int r = 0; r < per_class; ++r) {
                const std::size_t i = first + r;
                out.true_labels[i] = c;  // sentinel, one past the last class
                out.given_labels[i] = any_class(ood_rng);
                out.is_ood[i] = 1;
            }
        }
    }

    const NoiseKind id_kind = spec.kind == NoiseKind::openset ? *spec.id_kind : spec.kind;
    Rng flip_rng(derive_seed(seed, Stream::noise));
    std::bernoulli_distribution flip(spec.rate);
    for (std::size_t i = 0; i < n_id; ++i) {
        if (flip(flip_rng)) out.given_labels[i] = flipped_label(id_kind, out.true_labels[i], c, flip_rng);
    }
    return out;
}

std::vector<double> feature_std(const Matrix& features) {
    std::vector<double> mean(features.cols, 0.0), var(features.cols, 0.0);
    for (std::size_t i = 0; i < features.rows; ++i) {
        const double* row = features.row(i);
        for (std::size_t k = 0; k < features.cols; ++k) mean[k] += row[k];
    }
    for (double& m : mean) m /= static_cast<double>(features.rows);
    for (std::size_t i = 0; i < features.rows; ++i) {
        const double* row = features.row(i);
        for (std::size_t k = 0; k < features.cols; ++k) {
            const double d = row[k] - mean[k];
            var[k] += d * d;
        }
    }
    std::vector<double> out(features.cols);
    for (std::size_t k = 0; k < features.cols; ++k)
        out[k] = std::sqrt(var[k] / static_cast<double>(features.rows));
    return out;
}

void augment_row(const double* x, double* out, std::size_t dim, AugmentStrength strength,
                 const std::vector<double>& stats, Rng& rng) {
    const double scale = strength == AugmentStrength::weak ? kWeakJitter : kStrongJitter;
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t k = 0; k < dim; ++k) out[k] = x[k] + scale * stats[k] * unit(rng);
    if (strength == AugmentStrength::strong) {
        std::bernoulli_distribution mask(kMaskProb);
        for (std::size_t k = 0; k < dim; ++k)
            if (mask(rng)) out[k] = 0.0;
    }
}

std::vector<double> augment(std::span<const double> x, AugmentStrength strength,
                            const std::vector<double>& stats, Rng& rng) {
    if (stats.size() != x.size()) throw ConfigError("augment stats must match the feature dimension");
    for (double s : stats)
        if (!(s > 0.0)) throw ConfigError("augment stats must be strictly positive");
    std::vector<double> out(x.size());
    augment_row(x.data(), out.data(), x.size(), strength, stats, rng);
    return out;
}

namespace {

constexpr char kBinaryMagic[8] = {'N', 'L', 'T', 'D', 'S', 'B', '0', '1'};

void check_dataset(const Dataset& ds, const std::string& path) {
    if (!all_finite(ds.features)) throw ConfigError(path + ": dataset contains non-finite features");
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int given = ds.given_labels[i];
        if (given < 0 || given >= ds.class_count)
            throw ConfigError(path + ": given label out of range");
        const int truth = ds.true_labels[i];
        if (ds.is_ood[i] ? truth != ds.class_count : (truth < 0 || truth >= ds.class_count))
            throw ConfigError(path + ": true label out of range");
    }
}

}  // namespace

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    for (std::size_t k = 0; k < ds.dim(); ++k) os << 'f' << k << ',';
    os << "true_label,given_label,is_ood\n";
    char buf[40];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double* row = ds.features.row(i);
        for (std::size_t k = 0; k < ds.dim(); ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[k]);
            os << buf << ',';
        }
        os << ds.true_labels[i] << ',' << ds.given_labels[i] << ',' << int(ds.is_ood[i]) << '\n';
    }
    if (!os) throw ConfigError("failed writing " + path);
}

Dataset load_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open " + path);
    std::string header;
    if (!std::getline(is, header)) throw ConfigError(path + ": empty file");
    std::size_t dim = 0;
    {
        std::stringstream ss(header);
        std::string col;
        while (std::getline(ss, col, ',')) {
            if (col.size() > 1 && col[0] == 'f') ++dim;
        }
        if (dim == 0 || header.find("true_label,given_label,is_ood") == std::string::npos)
            throw ConfigError(path + ": unrecognised CSV header");
    }

    std::vector<double> values;
    std::vector<int> truth, given;
    std::vector<std::uint8_t> ood;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        for (std::size_t k = 0; k < dim; ++k) {
            if (!std::getline(ss, cell, ',')) throw ConfigError(path + ": truncated row");
            values.push_back(std::stod(cell));
        }
        if (!std::getline(ss, cell, ',')) throw ConfigError(path + ": truncated row");
        truth.push_back(std::stoi(cell));
        if (!std::getline(ss, cell, ',')) throw ConfigError(path + ": truncated row");
        given.push_back(std::stoi(cell));
        if (!std::getline(ss, cell, ',')) throw ConfigError(path + ": truncated row");
        ood.push_back(static_cast<std::uint8_t>(std::stoi(cell)));
    }

    Dataset ds;
    ds.features = Matrix(truth.size(), dim);
    ds.features.data = std::move(values);
    ds.true_labels = std::move(truth);
    ds.given_labels = std::move(given);
    ds.is_ood = std::move(ood);
    // The CSV form does not carry the class count; recover it from the labels.
    int c = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        c = std::max(c, ds.given_labels[i] + 1);
        if (!ds.is_ood[i]) c = std::max(c, ds.true_labels[i] + 1);
    }
    ds.class_count = c;
    check_dataset(ds, path);
    return ds;
}

namespace {

template <class T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

void save_binary(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    os.write(kBinaryMagic, sizeof(kBinaryMagic));
    write_pod(os, static_cast<std::uint32_t>(ds.class_count));
    write_pod(os, static_cast<std::uint64_t>(ds.size()));
    write_pod(os, static_cast<std::uint64_t>(ds.dim()));
    os.write(reinterpret_cast<const char*>(ds.features.data.data()),
             static_cast<std::streamsize>(ds.features.data.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(ds.true_labels.data()),
             static_cast<std::streamsize>(ds.true_labels.size() * sizeof(int)));
    os.write(reinterpret_cast<const char*>(ds.given_labels.data()),
             static_cast<std::streamsize>(ds.given_labels.size() * sizeof(int)));
    os.write(reinterpret_cast<const char*>(ds.is_ood.data()),
             static_cast<std::streamsize>(ds.is_ood.size()));
    if (!os) throw ConfigError("failed writing " + path);
}

Dataset load_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kBinaryMagic, sizeof(magic)) != 0)
        throw ConfigError(path + ": not a dataset file (bad magic)");
    std::uint32_t classes = 0;
    std::uint64_t n = 0, dim = 0;
    read_pod(is, classes);
    read_pod(is, n);
    read_pod(is, dim);
    if (!is || classes < 2 || n == 0 || dim == 0) throw ConfigError(path + ": corrupt header");

    Dataset ds;
    ds.class_count = static_cast<int>(classes);
    ds.features = Matrix(n, dim);
    ds.true_labels.resize(n);
    ds.given_labels.resize(n);
    ds.is_ood.resize(n);
    is.read(reinterpret_cast<char*>(ds.features.data.data()),
            static_cast<std::streamsize>(ds.features.data.size() * sizeof(double)));
    is.read(reinterpret_cast<char*>(ds.true_labels.data()),
            static_cast<std::streamsize>(n * sizeof(int)));
    is.read(reinterpret_cast<char*>(ds.given_labels.data()),
            static_cast<std::streamsize>(n * sizeof(int)));
    is.read(reinterpret_cast<char*>(ds.is_ood.data()), static_cast<std::streamsize>(n));
    if (!is) throw ConfigError(path + ": truncated dataset file");
    check_dataset(ds, path);
    return ds;
}

}  // namespace nlt
