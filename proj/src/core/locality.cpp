// SPDX-License-Identifier: Apache-2.0
#include "core/locality.hpp"

#include <algorithm>
#include <numeric>

namespace losa {

namespace {

// Token order by descending delta, ties by smaller token index.
std::vector<uint32_t> descending_order(const std::vector<double>& delta) {
    std::vector<uint32_t> order(delta.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
        if (delta[a] != delta[b]) return delta[a] > delta[b];
        return a < b;
    });
    return order;
}

} // namespace

LocalityScores locality_scores(const Matrix& current, const Matrix& previous) {
    require(current.rows() == previous.rows() && current.cols() == previous.cols(),
            ErrorCode::Shape, "locality_scores: shape mismatch");
    require(current.cols() >= 1, ErrorCode::Shape, "locality_scores: empty token dimension");

    LocalityScores out;
    out.delta.resize(current.rows());
    for (size_t i = 0; i < current.rows(); ++i) {
        auto cur = current.row(i);
        auto prev = previous.row(i);
        double acc = 0.0;
        for (size_t j = 0; j < cur.size(); ++j) {
            const double diff = double(cur[j]) - double(prev[j]);
            acc += diff * diff;
        }
        out.delta[i] = acc / double(current.cols());
    }
    return out;
}

ActiveSet select_active_topk(const LocalityScores& scores, uint32_t k_active) {
    require(k_active >= 1, ErrorCode::Config, "k_active must be >= 1");
    auto order = descending_order(scores.delta);
    order.resize(std::min<size_t>(order.size(), k_active));
    std::sort(order.begin(), order.end());
    return {std::move(order), ActivePolicy::TopK};
}

ActiveSet select_active_threshold(const LocalityScores& scores, double tau) {
    require(tau > 0.0 && tau <= 1.0, ErrorCode::Config, "tau must be in (0, 1]");
    auto order = descending_order(scores.delta);
    if (order.empty()) return {{}, ActivePolicy::Threshold};

    // Total accumulated in the same descending order as the prefix sums, so
    // the stopping comparison is exact.
    double total = 0.0;
    for (uint32_t t : order) total += scores.delta[t];

    std::vector<uint32_t> taken;
    if (total <= 0.0) {
        taken.push_back(order[0]); // no token changed: keep the max-delta token
    } else if (tau == 1.0) {
        for (uint32_t t : order)
            if (scores.delta[t] > 0.0) taken.push_back(t);
    } else {
        const double target = tau * total;
        double cum = 0.0;
        for (uint32_t t : order) {
            taken.push_back(t);
            cum += scores.delta[t];
            if (cum >= target) break;
        }
    }
    std::sort(taken.begin(), taken.end());
    return {std::move(taken), ActivePolicy::Threshold};
}

} // namespace losa
