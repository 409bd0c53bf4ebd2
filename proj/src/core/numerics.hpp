// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "core/matrix.hpp"

namespace losa {

// Dot product of two float32 rows with float64 accumulation, times `scale`.
// Every attention score and every page bound goes through this accumulation
// order, which is what makes the selector bound sound without tolerances.
double scaled_dot(std::span<const float> a, std::span<const float> b, double scale);

// out[i][j] = sum_t a[i][t] * b[j][t]
Matrix matmul_transposed(const Matrix& a, const Matrix& b);

// Numerically stable row softmax; the max is always subtracted first.
std::vector<float> softmax_row(std::span<const float> scores);

// max(s) + log(sum(exp(s - max))). Empty input yields -inf, the additive
// identity used by empty attention partials.
double logsumexp_row(std::span<const float> scores);

} // namespace losa
