// SPDX-License-Identifier: Apache-2.0
#include "core/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "core/parallel.hpp"

namespace losa {

const char* method_name(Method m) {
    switch (m) {
    case Method::Dense: return "dense";
    case Method::Quest: return "quest";
    case Method::Losa: return "losa";
    }
    return "unknown";
}

void EngineConfig::validate() const {
    require(budget >= 1, ErrorCode::Config, "budget must be >= 1");
    require(page_size >= 1, ErrorCode::Config, "page_size must be >= 1");
    require(heads >= 1, ErrorCode::Config, "heads must be >= 1");
    require(head_dim >= 1, ErrorCode::Config, "head_dim must be >= 1");
    if (policy == ActivePolicy::TopK)
        require(k_active >= 1, ErrorCode::Config, "k_active must be >= 1");
    else
        require(std::isfinite(tau) && tau > 0.0 && tau <= 1.0, ErrorCode::Config,
                "tau must be in (0, 1]");
}

size_t BlockState::cached_scalar_count() const {
    size_t n = 0;
    for (const PartialAttention& p : cached_prefix)
        n += p.scalar_count();
    return n;
}

namespace {

void validate_block(std::span<const PagedPrefix> prefix, const StepTensors& block,
                    const EngineConfig& cfg) {
    require(block.queries.size() == cfg.heads && block.keys.size() == cfg.heads &&
                block.values.size() == cfg.heads,
            ErrorCode::Config, "block tensors do not match the configured head count");
    require(!block.queries.empty() && block.queries[0].rows() >= 1, ErrorCode::Shape,
            "block must contain at least one token");
    const size_t B = block.queries[0].rows();
    for (uint32_t h = 0; h < cfg.heads; ++h) {
        for (const Matrix* m : {&block.queries[h], &block.keys[h], &block.values[h]}) {
            require(m->rows() == B, ErrorCode::Shape, "inconsistent block size across tensors");
            require(m->cols() == cfg.head_dim, ErrorCode::Shape,
                    "block tensor head dimension mismatch");
        }
    }
    if (!prefix.empty()) {
        require(prefix.size() == cfg.heads, ErrorCode::Config,
                "prefix head count does not match the engine config");
        for (const PagedPrefix& p : prefix) {
            require(p.dim() == cfg.head_dim, ErrorCode::Shape, "prefix head dimension mismatch");
            require(p.page_size() == cfg.page_size, ErrorCode::Config,
                    "prefix page size differs from the engine config");
            require(p.length() == prefix[0].length(), ErrorCode::Shape,
                    "prefix length differs across heads");
        }
    }
}

Matrix concat_heads(std::span<const Matrix> per_head) {
    const size_t rows = per_head[0].rows();
    const size_t cols = per_head[0].cols();
    Matrix out(rows, cols * per_head.size());
    for (size_t h = 0; h < per_head.size(); ++h)
        for (size_t i = 0; i < rows; ++i)
            std::copy_n(per_head[h].row(i).data(), cols, out.row(i).data() + h * cols);
    return out;
}

ActiveSet apply_policy(const LocalityScores& delta, const EngineConfig& cfg) {
    if (cfg.policy == ActivePolicy::TopK)
        return select_active_topk(delta, cfg.k_active);
    return select_active_threshold(delta, cfg.tau);
}

LocalityScores block_signal_delta(const StepTensors& block, const BlockState& state,
                                  const EngineConfig& cfg) {
    const Matrix q = concat_heads(block.queries);
    LocalityScores delta = locality_scores(q, state.prev_queries);
    if (cfg.signal == LocalitySignal::QueryKeyValue) {
        const LocalityScores dk = locality_scores(concat_heads(block.keys), state.prev_keys);
        const LocalityScores dv = locality_scores(concat_heads(block.values), state.prev_values);
        for (size_t i = 0; i < delta.delta.size(); ++i)
            delta.delta[i] = (delta.delta[i] + dk.delta[i] + dv.delta[i]) / 3.0;
    }
    return delta;
}

void remember_signal(BlockState& state, const StepTensors& block, const EngineConfig& cfg) {
    state.prev_queries = concat_heads(block.queries);
    if (cfg.signal == LocalitySignal::QueryKeyValue) {
        state.prev_keys = concat_heads(block.keys);
        state.prev_values = concat_heads(block.values);
    }
}

HeadStepStats full_prefix_head_stats(uint32_t head, size_t L, size_t P, size_t d) {
    HeadStepStats hs;
    hs.head = head;
    hs.union_page_count = uint32_t(P);
    hs.union_positions = L;
    hs.density = 1.0; // also the documented value for the no-prefix degenerate mode
    hs.kv_elements_loaded = 2.0 * double(d) * double(L);
    return hs;
}

uint64_t union_position_cap(size_t L, size_t B, const EngineConfig& cfg) {
    const uint64_t pages = (uint64_t(cfg.budget) + cfg.page_size - 1) / cfg.page_size;
    return std::min<uint64_t>(L, uint64_t(B) * pages * cfg.page_size);
}

void check_union_invariant(const HeadStepStats& hs, size_t L, size_t B,
                           const EngineConfig& cfg) {
    if (hs.union_positions > union_position_cap(L, B, cfg)) {
        std::ostringstream os;
        os << "invariant violated: union_positions " << hs.union_positions
           << " exceeds min(L, B*ceil(k/g)*g) for head " << hs.head;
        raise(ErrorCode::Invariant, os.str());
    }
}

// Per-query page selection for the given rows plus the union; budget >= L
// short-circuits to the whole prefix (density 1.0, no bound evaluations).
SelectionResult select_for_rows(const Matrix& queries, std::span<const uint32_t> rows,
                                const PagedPrefix& prefix, uint32_t budget,
                                uint32_t* selector_ops) {
    std::vector<std::vector<uint32_t>> sets;
    sets.reserve(rows.size());
    if (budget >= prefix.length()) {
        std::vector<uint32_t> all(prefix.page_count());
        std::iota(all.begin(), all.end(), 0u);
        for (size_t i = 0; i < rows.size(); ++i) sets.push_back(all);
        *selector_ops = 0;
    } else {
        for (uint32_t r : rows)
            sets.push_back(select_pages(queries.row(r), prefix, budget));
        *selector_ops = uint32_t(rows.size());
    }
    return union_selection(std::move(sets), prefix);
}

StepStats aggregate_stats(Method method, uint32_t active_count, size_t pages_total,
                          std::vector<HeadStepStats> heads) {
    StepStats s;
    s.method = method;
    s.active_count = active_count;
    s.pages_total = uint32_t(pages_total);
    double density = 0.0, pages = 0.0, kv = 0.0;
    for (const HeadStepStats& h : heads) {
        density += h.density;
        pages += double(h.union_page_count);
        kv += h.kv_elements_loaded;
    }
    const double H = double(heads.size());
    s.density = density / H;
    s.union_pages = pages / H;
    s.kv_elements_loaded = kv / H;
    s.per_head = std::move(heads);
    return s;
}

} // namespace

std::vector<PagedPrefix> build_prefix_pages(const DenoiseWorkload& w, uint32_t page_size) {
    std::vector<PagedPrefix> out;
    if (w.prefix_len == 0) return out;
    out.reserve(w.heads);
    for (uint32_t h = 0; h < w.heads; ++h)
        out.emplace_back(w.prefix_keys[h], w.prefix_values[h], page_size);
    return out;
}

InitResult init_block(std::span<const PagedPrefix> prefix, const StepTensors& block,
                      const EngineConfig& cfg) {
    cfg.validate();
    validate_block(prefix, block, cfg);
    const size_t H = cfg.heads;
    const size_t B = block.queries[0].rows();
    const size_t d = cfg.head_dim;
    const size_t L = prefix.empty() ? 0 : prefix[0].length();
    const size_t P = prefix.empty() ? 0 : prefix[0].page_count();

    InitResult res;
    res.outputs.resize(H);
    res.state.config = cfg;
    res.state.cached_prefix.resize(H);
    std::vector<HeadStepStats> head_stats(H);

    parallel_for(H, [&](size_t h) {
        PartialAttention p =
            L > 0 ? partial_attention(block.queries[h], prefix[h].keys(), prefix[h].values())
                  : PartialAttention::empty_partial(B, d);
        const PartialAttention b =
            partial_attention(block.queries[h], block.keys[h], block.values[h]);
        res.outputs[h] = merge_partials(p, b).output;
        res.state.cached_prefix[h] = std::move(p);
        head_stats[h] = full_prefix_head_stats(uint32_t(h), L, P, d);
    });

    remember_signal(res.state, block, cfg);
    res.state.step_index = 1;
    res.stats = aggregate_stats(Method::Losa, uint32_t(B), P, std::move(head_stats));
    return res;
}

StepResult step_losa(BlockState& state, std::span<const PagedPrefix> prefix,
                     const StepTensors& block, const EngineConfig& cfg) {
    cfg.validate();
    validate_block(prefix, block, cfg);
    require(state.step_index >= 1, ErrorCode::State, "block state not initialized");
    require(state.config == cfg, ErrorCode::Config,
            "engine config differs from the state snapshot");
    const size_t H = cfg.heads;
    const size_t B = block.queries[0].rows();
    const size_t d = cfg.head_dim;
    require(state.prev_queries.rows() == B && state.prev_queries.cols() == H * d,
            ErrorCode::State, "block shape differs from the cached state");
    const size_t L = prefix.empty() ? 0 : prefix[0].length();
    const size_t P = prefix.empty() ? 0 : prefix[0].page_count();

    const LocalityScores delta = block_signal_delta(block, state, cfg);
    const ActiveSet active = apply_policy(delta, cfg);

    StepResult res;
    res.outputs.resize(H);
    std::vector<HeadStepStats> head_stats(H);

    parallel_for(H, [&](size_t h) {
        HeadStepStats hs;
        hs.head = uint32_t(h);
        if (L > 0) {
            uint32_t ops = 0;
            SelectionResult sel =
                select_for_rows(block.queries[h], active.indices, prefix[h], cfg.budget, &ops);
            if (!sel.union_pages.empty()) {
                Matrix active_q(active.indices.size(), d);
                for (size_t i = 0; i < active.indices.size(); ++i)
                    std::copy_n(block.queries[h].row(active.indices[i]).data(), d,
                                active_q.row(i).data());
                const PartialAttention fresh =
                    sparse_prefix_attention(active_q, prefix[h], sel.union_pages);
                PartialAttention& cached = state.cached_prefix[h];
                for (size_t i = 0; i < active.indices.size(); ++i) {
                    const uint32_t token = active.indices[i];
                    std::copy_n(fresh.output.row(i).data(), d, cached.output.row(token).data());
                    cached.lse[token] = fresh.lse[i];
                }
            }
            hs.union_page_count = uint32_t(sel.union_pages.size());
            hs.union_positions = sel.union_positions;
            hs.selector_ops = ops;
            hs.density = double(sel.union_positions) / double(L);
            hs.kv_elements_loaded = 2.0 * double(d) * double(sel.union_positions);
            hs.union_pages = std::move(sel.union_pages);
            check_union_invariant(hs, L, B, cfg);
        }
        const PartialAttention b =
            partial_attention(block.queries[h], block.keys[h], block.values[h]);
        res.outputs[h] = merge_partials(state.cached_prefix[h], b).output;
        head_stats[h] = std::move(hs);
    });

    remember_signal(state, block, cfg);
    res.stats = aggregate_stats(Method::Losa, uint32_t(active.indices.size()), P,
                                std::move(head_stats));
    res.stats.step = state.step_index;
    state.step_index += 1;
    return res;
}

StepResult step_quest(std::span<const PagedPrefix> prefix, const StepTensors& block,
                      const EngineConfig& cfg) {
    cfg.validate();
    validate_block(prefix, block, cfg);
    const size_t H = cfg.heads;
    const size_t B = block.queries[0].rows();
    const size_t d = cfg.head_dim;
    const size_t L = prefix.empty() ? 0 : prefix[0].length();
    const size_t P = prefix.empty() ? 0 : prefix[0].page_count();

    std::vector<uint32_t> all_rows(B);
    std::iota(all_rows.begin(), all_rows.end(), 0u);

    StepResult res;
    res.outputs.resize(H);
    std::vector<HeadStepStats> head_stats(H);

    parallel_for(H, [&](size_t h) {
        HeadStepStats hs;
        hs.head = uint32_t(h);
        PartialAttention pfx = PartialAttention::empty_partial(B, d);
        if (L > 0) {
            uint32_t ops = 0;
            SelectionResult sel =
                select_for_rows(block.queries[h], all_rows, prefix[h], cfg.budget, &ops);
            pfx = sparse_prefix_attention(block.queries[h], prefix[h], sel.union_pages);
            hs.union_page_count = uint32_t(sel.union_pages.size());
            hs.union_positions = sel.union_positions;
            hs.selector_ops = ops;
            hs.density = double(sel.union_positions) / double(L);
            hs.kv_elements_loaded = 2.0 * double(d) * double(sel.union_positions);
            hs.union_pages = std::move(sel.union_pages);
            check_union_invariant(hs, L, B, cfg);
        }
        const PartialAttention b =
            partial_attention(block.queries[h], block.keys[h], block.values[h]);
        res.outputs[h] = merge_partials(pfx, b).output;
        head_stats[h] = std::move(hs);
    });

    res.stats = aggregate_stats(Method::Quest, uint32_t(B), P, std::move(head_stats));
    return res;
}

StepResult step_dense(std::span<const PagedPrefix> prefix, const StepTensors& block,
                      const EngineConfig& cfg) {
    cfg.validate();
    validate_block(prefix, block, cfg);
    const size_t H = cfg.heads;
    const size_t B = block.queries[0].rows();
    const size_t d = cfg.head_dim;
    const size_t L = prefix.empty() ? 0 : prefix[0].length();
    const size_t P = prefix.empty() ? 0 : prefix[0].page_count();

    StepResult res;
    res.outputs.resize(H);
    std::vector<HeadStepStats> head_stats(H);

    parallel_for(H, [&](size_t h) {
        if (L > 0)
            res.outputs[h] = dense_attention_concat(block.queries[h], prefix[h].keys(),
                                                    prefix[h].values(), block.keys[h],
                                                    block.values[h]);
        else
            res.outputs[h] = dense_attention(block.queries[h], block.keys[h], block.values[h]);
        head_stats[h] = full_prefix_head_stats(uint32_t(h), L, P, d);
    });

    res.stats = aggregate_stats(Method::Dense, uint32_t(B), P, std::move(head_stats));
    return res;
}

RunResult run_block(const DenoiseWorkload& w, const EngineConfig& cfg, Method method) {
    cfg.validate();
    require(w.heads == cfg.heads && w.head_dim == cfg.head_dim, ErrorCode::Config,
            "workload dimensions differ from the engine config");
    require(w.step_count() >= 1, ErrorCode::InvalidArgument, "workload has no steps");

    const std::vector<PagedPrefix> prefix = build_prefix_pages(w, cfg.page_size);

    RunResult out;
    out.outputs.reserve(w.step_count());
    out.stats.reserve(w.step_count());

    BlockState state;
    for (uint32_t t = 0; t < w.step_count(); ++t) {
        const StepTensors& block = w.steps[t];
        StepResult r;
        switch (method) {
        case Method::Dense:
            r = step_dense(prefix, block, cfg);
            break;
        case Method::Quest:
            r = step_quest(prefix, block, cfg);
            break;
        case Method::Losa:
            if (t == 0) {
                InitResult init = init_block(prefix, block, cfg);
                r.outputs = std::move(init.outputs);
                r.stats = std::move(init.stats);
                state = std::move(init.state);
            } else {
                r = step_losa(state, prefix, block, cfg);
            }
            break;
        }
        r.stats.step = t;
        out.outputs.push_back(std::move(r.outputs));
        out.stats.push_back(std::move(r.stats));
    }
    return out;
}

} // namespace losa
