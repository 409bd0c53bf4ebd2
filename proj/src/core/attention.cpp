// SPDX-License-Identifier: Apache-2.0
#include "core/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/numerics.hpp"

namespace losa {

namespace {

constexpr float kNegInf = -std::numeric_limits<float>::infinity();

void check_qkv_shapes(const Matrix& q, const Matrix& k, const Matrix& v) {
    require(q.cols() >= 1, ErrorCode::Shape, "attention requires a positive head dimension");
    require(k.rows() == v.rows(), ErrorCode::Shape, "keys/values row count mismatch");
    if (k.rows() > 0)
        require(k.cols() == q.cols() && v.cols() == q.cols(), ErrorCode::Shape,
                "query/key/value dimension mismatch");
}

} // namespace

PartialAttention PartialAttention::empty_partial(size_t rows, size_t dim) {
    return {Matrix(rows, dim), std::vector<float>(rows, kNegInf)};
}

Matrix dense_attention(const Matrix& queries, const Matrix& keys, const Matrix& values) {
    check_qkv_shapes(queries, keys, values);
    require(keys.rows() >= 1, ErrorCode::InvalidArgument, "dense attention over empty keys");

    const size_t d = queries.cols();
    const size_t n = keys.rows();
    const double scale = 1.0 / std::sqrt(double(d));

    Matrix out(queries.rows(), d);
    std::vector<double> scores(n);
    std::vector<double> acc(d);
    for (size_t i = 0; i < queries.rows(); ++i) {
        auto q = queries.row(i);
        double m = -std::numeric_limits<double>::infinity();
        for (size_t t = 0; t < n; ++t) {
            scores[t] = scaled_dot(q, keys.row(t), scale);
            m = std::max(m, scores[t]);
        }
        double denom = 0.0;
        std::fill(acc.begin(), acc.end(), 0.0);
        for (size_t t = 0; t < n; ++t) {
            const double w = std::exp(scores[t] - m);
            denom += w;
            auto vrow = values.row(t);
            for (size_t j = 0; j < d; ++j)
                acc[j] += w * double(vrow[j]);
        }
        auto orow = out.row(i);
        for (size_t j = 0; j < d; ++j)
            orow[j] = float(acc[j] / denom);
    }
    return out;
}

PartialAttention partial_attention(const Matrix& queries, const Matrix& keys,
                                   const Matrix& values) {
    check_qkv_shapes(queries, keys, values);

    const size_t d = queries.cols();
    const size_t n = keys.rows();
    PartialAttention out{Matrix(queries.rows(), d), std::vector<float>(queries.rows(), kNegInf)};
    if (n == 0) return out;

    const double scale = 1.0 / std::sqrt(double(d));
    std::vector<double> scores(n);
    std::vector<double> acc(d);
    for (size_t i = 0; i < queries.rows(); ++i) {
        auto q = queries.row(i);
        double m = -std::numeric_limits<double>::infinity();
        for (size_t t = 0; t < n; ++t) {
            scores[t] = scaled_dot(q, keys.row(t), scale);
            m = std::max(m, scores[t]);
        }
        double denom = 0.0;
        std::fill(acc.begin(), acc.end(), 0.0);
        for (size_t t = 0; t < n; ++t) {
            const double w = std::exp(scores[t] - m);
            denom += w;
            auto vrow = values.row(t);
            for (size_t j = 0; j < d; ++j)
                acc[j] += w * double(vrow[j]);
        }
        out.lse[i] = float(m + std::log(denom));
        auto orow = out.output.row(i);
        for (size_t j = 0; j < d; ++j)
            orow[j] = float(acc[j] / denom);
    }
    return out;
}

PartialAttention merge_partials(const PartialAttention& a, const PartialAttention& b) {
    require(a.output.rows() == b.output.rows() && a.output.cols() == b.output.cols(),
            ErrorCode::Shape, "merge_partials: output shape mismatch");
    require(a.lse.size() == a.output.rows() && b.lse.size() == b.output.rows(),
            ErrorCode::Shape, "merge_partials: lse length mismatch");

    const size_t rows = a.output.rows();
    const size_t d = a.output.cols();
    PartialAttention out{Matrix(rows, d), std::vector<float>(rows, kNegInf)};
    for (size_t i = 0; i < rows; ++i) {
        const double la = a.lse[i];
        const double lb = b.lse[i];
        const double m = std::max(la, lb);
        if (m == -std::numeric_limits<double>::infinity())
            continue; // both partials empty: stay (zeros, -inf)
        const double wa = std::exp(la - m);
        const double wb = std::exp(lb - m);
        const double denom = wa + wb;
        auto arow = a.output.row(i);
        auto brow = b.output.row(i);
        auto orow = out.output.row(i);
        for (size_t j = 0; j < d; ++j)
            orow[j] = float((wa * double(arow[j]) + wb * double(brow[j])) / denom);
        out.lse[i] = float(m + std::log(denom));
    }
    return out;
}

PartialAttention sparse_prefix_attention(const Matrix& active_queries, const PagedPrefix& prefix,
                                         std::span<const uint32_t> union_pages) {
    require(active_queries.rows() >= 1, ErrorCode::InvalidArgument,
            "sparse prefix attention requires at least one query");
    require(active_queries.cols() == prefix.dim(), ErrorCode::Shape,
            "query dimension does not match prefix");
    for (size_t i = 0; i < union_pages.size(); ++i) {
        require(union_pages[i] < prefix.page_count(), ErrorCode::Index,
                "union page index out of range");
        if (i > 0)
            require(union_pages[i] > union_pages[i - 1], ErrorCode::InvalidArgument,
                    "union pages must be strictly ascending");
    }
    if (union_pages.empty())
        return PartialAttention::empty_partial(active_queries.rows(), active_queries.cols());

    size_t gathered = 0;
    for (uint32_t p : union_pages)
        gathered += prefix.page_length(p);

    const size_t d = prefix.dim();
    Matrix k_sel(gathered, d);
    Matrix v_sel(gathered, d);
    size_t row = 0;
    for (uint32_t p : union_pages) {
        const size_t begin = prefix.page_begin(p);
        const size_t len = prefix.page_length(p);
        for (size_t r = 0; r < len; ++r, ++row) {
            std::copy_n(prefix.keys().row(begin + r).data(), d, k_sel.row(row).data());
            std::copy_n(prefix.values().row(begin + r).data(), d, v_sel.row(row).data());
        }
    }
    return partial_attention(active_queries, k_sel, v_sel);
}

Matrix dense_attention_concat(const Matrix& queries, const Matrix& keys_a, const Matrix& values_a,
                              const Matrix& keys_b, const Matrix& values_b) {
    check_qkv_shapes(queries, keys_a, values_a);
    check_qkv_shapes(queries, keys_b, values_b);
    const size_t na = keys_a.rows();
    const size_t nb = keys_b.rows();
    require(na + nb >= 1, ErrorCode::InvalidArgument, "dense attention over empty keys");

    const size_t d = queries.cols();
    const double scale = 1.0 / std::sqrt(double(d));
    Matrix out(queries.rows(), d);
    std::vector<double> scores(na + nb);
    std::vector<double> acc(d);
    for (size_t i = 0; i < queries.rows(); ++i) {
        auto q = queries.row(i);
        double m = -std::numeric_limits<double>::infinity();
        for (size_t t = 0; t < na; ++t) {
            scores[t] = scaled_dot(q, keys_a.row(t), scale);
            m = std::max(m, scores[t]);
        }
        for (size_t t = 0; t < nb; ++t) {
            scores[na + t] = scaled_dot(q, keys_b.row(t), scale);
            m = std::max(m, scores[na + t]);
        }
        double denom = 0.0;
        std::fill(acc.begin(), acc.end(), 0.0);
        for (size_t t = 0; t < na + nb; ++t) {
            const double w = std::exp(scores[t] - m);
            denom += w;
            auto vrow = t < na ? values_a.row(t) : values_b.row(t - na);
            for (size_t j = 0; j < d; ++j)
                acc[j] += w * double(vrow[j]);
        }
        auto orow = out.row(i);
        for (size_t j = 0; j < d; ++j)
            orow[j] = float(acc[j] / denom);
    }
    return out;
}

} // namespace losa
