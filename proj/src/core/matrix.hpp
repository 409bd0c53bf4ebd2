// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstring>
#include <initializer_list>
#include <span>
#include <vector>

#include "core/error.hpp"

namespace losa {

// Dense row-major float32 matrix. Backs every Q/K/V/output tensor; the
// kernels accumulate in double and store back to float32.
class Matrix {
public:
    Matrix() = default;
    Matrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}
    Matrix(size_t rows, size_t cols, std::vector<float> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        require(data_.size() == rows_ * cols_, ErrorCode::Shape,
                "matrix data length does not match rows*cols");
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<float>> rows) {
        Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
        size_t i = 0;
        for (const auto& r : rows) {
            require(r.size() == m.cols_, ErrorCode::Shape, "ragged row in matrix literal");
            std::copy(r.begin(), r.end(), m.data_.begin() + i * m.cols_);
            ++i;
        }
        return m;
    }

    size_t rows() const noexcept { return rows_; }
    size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const float> row(size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<float> row(size_t i) { return {data_.data() + i * cols_, cols_}; }

    float operator()(size_t i, size_t j) const { return data_[i * cols_ + j]; }
    float& operator()(size_t i, size_t j) { return data_[i * cols_ + j]; }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    bool all_finite() const noexcept {
        for (float v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    size_t rows_ = 0;
    size_t cols_ = 0;
    std::vector<float> data_;
};

inline bool bitwise_equal(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    if (a.data().empty()) return true;
    return std::memcmp(a.data().data(), b.data().data(), a.data().size_bytes()) == 0;
}

} // namespace losa
