// SPDX-License-Identifier: Apache-2.0
#include "core/selector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/numerics.hpp"

namespace losa {

PagedPrefix::PagedPrefix(Matrix keys, Matrix values, uint32_t page_size)
    : keys_(std::move(keys)), values_(std::move(values)), page_size_(page_size) {
    require(page_size_ >= 1, ErrorCode::Config, "page size must be >= 1");
    require(keys_.rows() >= 1, ErrorCode::InvalidArgument, "paged prefix requires at least one key");
    require(keys_.cols() >= 1, ErrorCode::Shape, "prefix keys need a positive dimension");
    require(values_.rows() == keys_.rows() && values_.cols() == keys_.cols(), ErrorCode::Shape,
            "prefix keys/values shape mismatch");

    const size_t d = keys_.cols();
    page_count_ = (keys_.rows() + page_size_ - 1) / page_size_;
    page_min_ = Matrix(page_count_, d);
    page_max_ = Matrix(page_count_, d);
    for (size_t p = 0; p < page_count_; ++p) {
        const size_t begin = page_begin(p);
        const size_t len = page_length(p);
        auto mn = page_min_.row(p);
        auto mx = page_max_.row(p);
        std::copy_n(keys_.row(begin).data(), d, mn.data());
        std::copy_n(keys_.row(begin).data(), d, mx.data());
        for (size_t r = 1; r < len; ++r) {
            auto key = keys_.row(begin + r);
            for (size_t j = 0; j < d; ++j) {
                mn[j] = std::min(mn[j], key[j]);
                mx[j] = std::max(mx[j], key[j]);
            }
        }
    }
}

double page_upper_bound(std::span<const float> query, const PagedPrefix& prefix, size_t page) {
    require(page < prefix.page_count(), ErrorCode::Index, "page index out of range");
    require(query.size() == prefix.dim(), ErrorCode::Shape, "query dimension mismatch");
    auto mn = prefix.page_min().row(page);
    auto mx = prefix.page_max().row(page);
    double acc = 0.0;
    for (size_t j = 0; j < query.size(); ++j) {
        const double q = query[j];
        acc += std::max(q * double(mn[j]), q * double(mx[j]));
    }
    return acc * (1.0 / std::sqrt(double(prefix.dim())));
}

std::vector<uint32_t> select_pages(std::span<const float> query, const PagedPrefix& prefix,
                                   uint32_t budget) {
    require(budget >= 1, ErrorCode::Config, "selection budget must be >= 1");
    const size_t total = prefix.page_count();
    const size_t wanted = std::min<size_t>(total, (size_t(budget) + prefix.page_size() - 1) / prefix.page_size());

    std::vector<uint32_t> order(total);
    std::iota(order.begin(), order.end(), 0u);
    if (wanted < total) {
        std::vector<double> bounds(total);
        for (size_t p = 0; p < total; ++p)
            bounds[p] = page_upper_bound(query, prefix, p);
        std::partial_sort(order.begin(), order.begin() + wanted, order.end(),
                          [&](uint32_t a, uint32_t b) {
                              if (bounds[a] != bounds[b]) return bounds[a] > bounds[b];
                              return a < b;
                          });
        order.resize(wanted);
        std::sort(order.begin(), order.end());
    }
    return order;
}

SelectionResult union_selection(std::vector<std::vector<uint32_t>> per_query_pages,
                                const PagedPrefix& prefix) {
    const size_t total = prefix.page_count();
    std::vector<bool> present(total, false);
    for (const auto& set : per_query_pages)
        for (uint32_t p : set) {
            require(p < total, ErrorCode::Index, "page index out of range in selection set");
            present[p] = true;
        }

    SelectionResult out;
    out.per_query_pages = std::move(per_query_pages);
    for (size_t p = 0; p < total; ++p) {
        if (!present[p]) continue;
        out.union_pages.push_back(uint32_t(p));
        out.union_positions += prefix.page_length(p);
    }
    return out;
}

} // namespace losa
