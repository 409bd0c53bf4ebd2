// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/matrix.hpp"

namespace losa {

enum class PerturbPattern : uint8_t { Window, UniformRows };

// Controls for the synthetic denoising-trajectory generator.
struct GenConfig {
    uint32_t heads = 1;
    uint32_t head_dim = 64;
    uint32_t prefix_len = 1024; // L
    uint32_t block_size = 16;   // B
    uint32_t steps = 8;         // S
    double active_fraction = 0.3125; // fraction of block rows perturbed per step
    double perturb_scale = 0.1;      // noise std added to perturbed rows
    double base_scale = 1.0;         // std of the step-0 draw and the prefix
    uint64_t seed = 0;
    PerturbPattern pattern = PerturbPattern::Window;

    uint32_t perturbed_rows() const; // round(active_fraction * block_size)
    void validate() const;
};

// One denoising step's block tensors, one matrix per head.
struct StepTensors {
    std::vector<Matrix> queries;
    std::vector<Matrix> keys;
    std::vector<Matrix> values;
};

// A full denoising trajectory: a prefix KV cache fixed across steps, plus
// per-step block tensors for every head.
struct DenoiseWorkload {
    uint32_t heads = 0;
    uint32_t head_dim = 0;
    uint32_t prefix_len = 0;
    uint32_t block_size = 0;
    std::vector<Matrix> prefix_keys;   // one per head, L x d
    std::vector<Matrix> prefix_values; // one per head, L x d
    std::vector<StepTensors> steps;
    std::string source; // provenance tag: generator parameters or trace path

    uint32_t step_count() const { return uint32_t(steps.size()); }
};

DenoiseWorkload gen_synthetic(const GenConfig& cfg);

// Binary trace I/O. The format is bit-exact and documented in the README so
// external model dumps can target it.
void save_trace(const DenoiseWorkload& workload, const std::string& path);
DenoiseWorkload load_trace(const std::string& path);

bool bitwise_equal(const DenoiseWorkload& a, const DenoiseWorkload& b);

} // namespace losa
