#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "modelmesh/errors.hpp"

namespace modelmesh {

// Dense row-major matrix of doubles. Deliberately plain: models here are tiny
// and bit-reproducibility matters more than BLAS throughput.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;  // row-major, rows*cols entries

    Matrix() = default;
    Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Matrix(size_t r, size_t c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != rows * cols) throw ShapeError("matrix data length != rows*cols");
    }

    double& at(size_t r, size_t c) { return data[r * cols + c]; }
    double at(size_t r, size_t c) const { return data[r * cols + c]; }

    double* row(size_t r) { return data.data() + r * cols; }
    const double* row(size_t r) const { return data.data() + r * cols; }

    bool operator==(const Matrix&) const = default;
};

inline void validate(const Matrix& m) {
    if (m.data.size() != m.rows * m.cols) throw ShapeError("matrix data length != rows*cols");
    for (const double v : m.data)
        if (!std::isfinite(v)) throw FormatError("matrix contains a non-finite entry");
}

}  // namespace modelmesh
