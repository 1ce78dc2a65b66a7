#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lexiport/error.hpp"

namespace lexiport {

// Dense row-major float matrix. Embedding tables of every kind use this.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            throw ContractError("matrix data size does not match shape");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    std::span<float> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const float> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    float& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    float operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::vector<float>& data() noexcept { return data_; }
    const std::vector<float>& data() const noexcept { return data_; }

    void append_row(std::span<const float> values) {
        if (values.size() != cols_) throw DimensionError("row width differs from matrix columns");
        data_.insert(data_.end(), values.begin(), values.end());
        ++rows_;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> data_;
};

}  // namespace lexiport
