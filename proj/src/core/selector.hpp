// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/matrix.hpp"

namespace losa {

// Immutable paged view of a prefix KV cache: contiguous pages of `page_size`
// keys with per-page elementwise min/max key metadata for bound-based page
// selection. The last page may be shorter than `page_size`.
class PagedPrefix {
public:
    PagedPrefix(Matrix keys, Matrix values, uint32_t page_size);

    size_t length() const noexcept { return keys_.rows(); } // L
    size_t dim() const noexcept { return keys_.cols(); }
    uint32_t page_size() const noexcept { return page_size_; }
    size_t page_count() const noexcept { return page_count_; }

    size_t page_begin(size_t page) const noexcept { return page * page_size_; }
    size_t page_length(size_t page) const noexcept {
        const size_t begin = page_begin(page);
        return std::min<size_t>(page_size_, length() - begin);
    }

    const Matrix& keys() const noexcept { return keys_; }
    const Matrix& values() const noexcept { return values_; }
    const Matrix& page_min() const noexcept { return page_min_; }
    const Matrix& page_max() const noexcept { return page_max_; }

private:
    Matrix keys_;
    Matrix values_;
    Matrix page_min_;
    Matrix page_max_;
    uint32_t page_size_ = 0;
    size_t page_count_ = 0;
};

// Query-dependent upper bound on the scaled score of any key in `page`:
// sum_j max(q_j*min_j, q_j*max_j) / sqrt(d). Each term dominates q_j*k_j for
// min_j <= k_j <= max_j, and the accumulation matches the score path, so the
// bound holds in floating point exactly.
double page_upper_bound(std::span<const float> query, const PagedPrefix& prefix, size_t page);

// The ceil(budget/page_size) pages with the largest upper bounds, clamped to
// the page count. Ties keep the smaller page index; result is ascending.
std::vector<uint32_t> select_pages(std::span<const float> query, const PagedPrefix& prefix,
                                   uint32_t budget);

struct SelectionResult {
    std::vector<std::vector<uint32_t>> per_query_pages;
    std::vector<uint32_t> union_pages; // ascending
    uint64_t union_positions = 0;      // unique key positions covered
};

SelectionResult union_selection(std::vector<std::vector<uint32_t>> per_query_pages,
                                const PagedPrefix& prefix);

} // namespace losa
