#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedad/errors.hpp"

namespace fedad {

// Dense row-major matrix of doubles. One row per sample.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }

    std::span<const double> row_span(std::size_t i) const {
        return {data.data() + i * cols, cols};
    }

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    void push_row(std::span<const double> r) {
        if (cols == 0) cols = r.size();
        if (r.size() != cols) throw NumericError("push_row: column count mismatch");
        data.insert(data.end(), r.begin(), r.end());
        ++rows;
    }

    bool empty() const { return rows == 0; }
};

inline double squared_distance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw NumericError("squared_distance: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

} // namespace fedad
