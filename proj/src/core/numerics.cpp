// SPDX-License-Identifier: Apache-2.0
#include "core/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace losa {

double scaled_dot(std::span<const float> a, std::span<const float> b, double scale) {
    double acc = 0.0;
    for (size_t j = 0; j < a.size(); ++j)
        acc += double(a[j]) * double(b[j]);
    return acc * scale;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.cols(), ErrorCode::Shape, "matmul_transposed: inner dimensions differ");
    Matrix out(a.rows(), b.rows());
    for (size_t i = 0; i < a.rows(); ++i)
        for (size_t j = 0; j < b.rows(); ++j)
            out(i, j) = float(scaled_dot(a.row(i), b.row(j), 1.0));
    return out;
}

std::vector<float> softmax_row(std::span<const float> scores) {
    require(!scores.empty(), ErrorCode::InvalidArgument, "softmax over empty scores");
    double m = -std::numeric_limits<double>::infinity();
    for (float s : scores) m = std::max(m, double(s));
    double denom = 0.0;
    std::vector<double> w(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) {
        w[i] = std::exp(double(scores[i]) - m);
        denom += w[i];
    }
    std::vector<float> out(scores.size());
    for (size_t i = 0; i < scores.size(); ++i)
        out[i] = float(w[i] / denom);
    return out;
}

double logsumexp_row(std::span<const float> scores) {
    if (scores.empty()) return -std::numeric_limits<double>::infinity();
    double m = -std::numeric_limits<double>::infinity();
    for (float s : scores) m = std::max(m, double(s));
    double acc = 0.0;
    for (float s : scores) acc += std::exp(double(s) - m);
    return m + std::log(acc);
}

} // namespace losa
