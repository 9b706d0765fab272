#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "jcisis/error.hpp"

namespace jcisis {

/// Dense column-major matrix of predictor values, n rows (samples) by p columns.
class NumericMatrix {
public:
    NumericMatrix() = default;
    NumericMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    NumericMatrix(std::size_t rows, std::size_t cols, std::vector<double> column_major)
        : rows_(rows), cols_(cols), data_(std::move(column_major)) {
        if (data_.size() != rows_ * cols_) {
            throw Error(ErrorCode::DimensionMismatch, "matrix storage does not match rows*cols");
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    std::span<const double> column(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }
    std::span<double> column(std::size_t j) { return {data_.data() + j * rows_, rows_}; }

    double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }

    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const NumericMatrix&, const NumericMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace jcisis
