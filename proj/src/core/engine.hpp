// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/attention.hpp"
#include "core/locality.hpp"
#include "core/selector.hpp"
#include "core/workload.hpp"

namespace losa {

enum class Method : uint8_t { Dense, Quest, Losa };
const char* method_name(Method m);

// Which block tensors feed the locality score: queries only, or the mean of
// the query/key/value deltas.
enum class LocalitySignal : uint8_t { Query, QueryKeyValue };

struct EngineConfig {
    uint32_t budget = 128;   // prefix positions per query (k)
    uint32_t page_size = 16; // g
    ActivePolicy policy = ActivePolicy::TopK;
    uint32_t k_active = 5;
    double tau = 0.5;
    LocalitySignal signal = LocalitySignal::Query;
    uint32_t heads = 1;
    uint32_t head_dim = 64;

    void validate() const;
    bool operator==(const EngineConfig&) const = default;
};

struct HeadStepStats {
    uint32_t head = 0;
    std::vector<uint32_t> union_pages; // ascending; empty on dense paths
    uint32_t union_page_count = 0;
    uint64_t union_positions = 0;
    uint32_t selector_ops = 0;
    double density = 1.0;
    double kv_elements_loaded = 0.0;
};

struct StepStats {
    uint32_t step = 0;
    Method method = Method::Dense;
    uint32_t active_count = 0;
    double union_pages = 0.0;        // mean page count across heads
    uint32_t pages_total = 0;
    double density = 1.0;            // mean of union_positions/L across heads
    double kv_elements_loaded = 0.0; // mean of 2*d*union_positions across heads
    double max_abs_err = 0.0;        // vs the dense oracle; filled by the report layer
    double mse = 0.0;
    double rel_fro_err = 0.0;
    std::vector<HeadStepStats> per_head;
};

// Per-block cache: per-head prefix statistics for all B tokens (exactly
// B*(d+1) scalars per head) plus the previous step's signal tensors. Step
// operations are single-writer per state; see the module notes in README.
struct BlockState {
    EngineConfig config;
    std::vector<PartialAttention> cached_prefix; // one per head
    Matrix prev_queries;                         // B x (heads*head_dim)
    Matrix prev_keys;                            // kept only for the QKV signal
    Matrix prev_values;
    uint32_t step_index = 0;

    size_t cached_scalar_count() const;
};

struct StepResult {
    std::vector<Matrix> outputs; // one B x d matrix per head
    StepStats stats;
};

struct InitResult {
    std::vector<Matrix> outputs;
    BlockState state;
    StepStats stats;
};

// One PagedPrefix per head. An empty result (prefix_len == 0) drives the
// documented block-only degenerate mode.
std::vector<PagedPrefix> build_prefix_pages(const DenoiseWorkload& w, uint32_t page_size);

// Dense initialization: full prefix attention for every token, cached for
// reuse. Density is 1.0 by definition.
InitResult init_block(std::span<const PagedPrefix> prefix, const StepTensors& block,
                      const EngineConfig& cfg);

// One locality-aware step: score the block signal against the previous step,
// pick the active set, select pages per active query, refresh their cached
// prefix statistics over the shared union, reuse the rest, attend densely
// within the block, and merge.
StepResult step_losa(BlockState& state, std::span<const PagedPrefix> prefix,
                     const StepTensors& block, const EngineConfig& cfg);

// Stateless per-step baseline: every query selects, the union covers the
// whole block's selections.
StepResult step_quest(std::span<const PagedPrefix> prefix, const StepTensors& block,
                      const EngineConfig& cfg);

// Single-pass attention over [prefix; block]; the error oracle. Page size is
// unused.
StepResult step_dense(std::span<const PagedPrefix> prefix, const StepTensors& block,
                      const EngineConfig& cfg);

struct RunResult {
    std::vector<std::vector<Matrix>> outputs; // [step][head]
    std::vector<StepStats> stats;             // one per step
};

// Drives a full trajectory with one method. LoSA initializes densely at step
// 0 and applies locality-aware steps afterwards; quest and dense apply
// uniformly at every step.
RunResult run_block(const DenoiseWorkload& w, const EngineConfig& cfg, Method method);

} // namespace losa
