// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "core/matrix.hpp"

namespace losa {

// Per-token mean squared representation change between two consecutive
// denoising steps.
struct LocalityScores {
    std::vector<double> delta; // length B, nonnegative
};

enum class ActivePolicy : uint8_t { TopK, Threshold };

// Sorted token positions (within the block) that get fresh sparse prefix
// attention this step.
struct ActiveSet {
    std::vector<uint32_t> indices; // ascending
    ActivePolicy policy = ActivePolicy::TopK;
};

// delta[i] = (1/cols) * sum_j (current[i][j] - previous[i][j])^2
LocalityScores locality_scores(const Matrix& current, const Matrix& previous);

// The min(k_active, B) tokens with the largest deltas; ties keep the smaller
// token index.
ActiveSet select_active_topk(const LocalityScores& scores, uint32_t k_active);

// Smallest descending-delta prefix whose cumulative mass reaches tau of the
// total. All-zero scores fall back to the single largest-delta token.
ActiveSet select_active_threshold(const LocalityScores& scores, double tau);

} // namespace losa
