#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "ordent/errors.hpp"

namespace ordent {

// Dense row-major matrix of doubles. Just enough linear algebra for this
// project; rows are contiguous so the hot loops vectorize.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw invalid_input_error("Matrix: negative dimension");
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    double* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    const double* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    std::span<const double> row_span(int r) const { return {row(r), static_cast<std::size_t>(cols_)}; }
    std::span<double> row_span(int r) { return {row(r), static_cast<std::size_t>(cols_)}; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// Kahan compensated accumulator. Pairwise loops accumulate through this so
// the result does not depend on traversal order at double precision.
class KahanSum {
public:
    void add(double x) {
        const double y = x - carry_;
        const double t = sum_ + y;
        carry_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const noexcept { return sum_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

} // namespace ordent
