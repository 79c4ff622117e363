#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace nlt {

// Dense row-major matrix of doubles. The engine only needs batched affine
// maps and row-wise reductions, so this stays minimal on purpose.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

inline bool all_finite(const Matrix& m) {
    for (double v : m.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace nlt
