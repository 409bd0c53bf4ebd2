// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/matrix.hpp"
#include "core/selector.hpp"

namespace losa {

// Attention output rows paired with their per-row log-normalizers. An lse of
// -inf marks an empty partial; its output row is all zeros. This is both the
// cached per-token prefix statistic and the unit merged by online softmax.
struct PartialAttention {
    Matrix output;          // one row per query
    std::vector<float> lse; // log-normalizer per query row

    static PartialAttention empty_partial(size_t rows, size_t dim);
    size_t scalar_count() const noexcept { return output.rows() * output.cols() + lse.size(); }
};

// softmax(Q K^T / sqrt(d)) V, row-wise. Requires at least one key.
Matrix dense_attention(const Matrix& queries, const Matrix& keys, const Matrix& values);

// Like dense_attention but also returns the log-normalizers. An empty key
// set is legal and produces the empty partial.
PartialAttention partial_attention(const Matrix& queries, const Matrix& keys, const Matrix& values);

// Online-softmax merge of two partials over disjoint key sets. Merging with
// an empty partial returns the other operand bit-exactly.
PartialAttention merge_partials(const PartialAttention& a, const PartialAttention& b);

// Prefix attention restricted to the keys/values of `union_pages`, gathered
// in ascending position order. Equivalent to partial_attention over the
// gathered rows; an empty union yields the empty partial.
PartialAttention sparse_prefix_attention(const Matrix& active_queries, const PagedPrefix& prefix,
                                         std::span<const uint32_t> union_pages);

// Single-pass dense attention over the concatenation [keys_a; keys_b]. This
// is the dense baseline; it deliberately does not share the merge path it is
// used to check.
Matrix dense_attention_concat(const Matrix& queries, const Matrix& keys_a, const Matrix& values_a,
                              const Matrix& keys_b, const Matrix& values_b);

} // namespace losa
