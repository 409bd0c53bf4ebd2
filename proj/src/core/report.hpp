// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/engine.hpp"

namespace losa {

struct ErrorMetrics {
    double max_abs_err = 0.0;
    double mse = 0.0;
    double rel_fro_err = 0.0; // ||diff||_F / ||oracle||_F, 0 when the oracle is zero
};

// Elementwise comparison of a method output against the dense oracle.
ErrorMetrics compute_error(const Matrix& method_output, const Matrix& dense_output);

struct MethodDensities {
    std::string provenance;
    std::vector<double> densities; // one per step
};

// mean(quest) / mean(losa); +inf when the losa mean is zero. Both inputs
// must come from the same workload and selector config.
double density_ratio(const MethodDensities& quest, const MethodDensities& losa);

// Numeric report fields are float32 so the documented 9-significant-digit
// decimal rendering round-trips exactly.
struct RunRecord {
    uint32_t step = 0;
    std::string method;
    uint32_t active_count = 0;
    float union_pages = 0.0f;
    uint32_t pages_total = 0;
    float density = 0.0f;
    float kv_elements_loaded = 0.0f;
    float max_abs_err = 0.0f;
    float mse = 0.0f;
    float rel_fro_err = 0.0f;
};

struct HeadRecord {
    uint32_t step = 0;
    std::string method;
    uint32_t head = 0;
    uint32_t union_pages = 0;
    float density = 0.0f;
    float kv_elements_loaded = 0.0f;
};

struct MethodSummary {
    std::string method;
    float mean_density = 0.0f;
    float max_abs_err = 0.0f;
};

struct RunReport {
    std::string provenance;
    uint32_t heads = 0, head_dim = 0, prefix_len = 0, block_size = 0, steps = 0;
    EngineConfig config;
    std::vector<RunRecord> records;    // sorted by (step, method)
    std::vector<HeadRecord> per_head;  // optional; sorted by (step, method, head)
    std::vector<MethodSummary> summary;
    // quest/losa mean-density ratio over the steps where both ran sparse
    // selection (the losa dense init is excluded); set when both methods are
    // present and at least one such step exists.
    double quest_losa_density_ratio = 0.0;
    bool has_density_ratio = false;
};

enum class ReportFormat : uint8_t { Csv, Json };

// Runs one method over the workload. Sparse methods are scored per step
// against a dense run of the same workload.
RunReport run_and_report(const DenoiseWorkload& w, const EngineConfig& cfg, Method method,
                         bool per_head_records);

// Runs dense, quest and losa on the same workload; quest/losa errors are
// measured against the dense outputs and the density ratio is summarized.
RunReport compare_and_report(const DenoiseWorkload& w, const EngineConfig& cfg,
                             bool per_head_records);

// Per-step locality diagnostics: deltas sorted descending, cumulative mass,
// and the token count selected at tau.
struct LocalityEntry {
    uint32_t step = 0; // current step t, compared against t-1
    uint32_t rank = 0; // position in the descending delta order
    uint32_t token = 0;
    float delta = 0.0f;
    float cumulative_fraction = 0.0f;
    bool selected = false;
};

struct LocalityReport {
    std::string provenance;
    uint32_t heads = 0, head_dim = 0, prefix_len = 0, block_size = 0, steps = 0;
    double tau = 0.5;
    LocalitySignal signal = LocalitySignal::Query;
    std::vector<LocalityEntry> entries;
    std::vector<uint32_t> tau_counts; // one per compared step (t = 1..S-1)
};

LocalityReport locality_stats(const DenoiseWorkload& w, double tau, LocalitySignal signal);

// Stable-byte renderers: identical reports produce identical text. Numbers
// print with up to 9 significant digits.
std::string render(const RunReport& report, ReportFormat format);
std::string render(const LocalityReport& report, ReportFormat format);

void emit(const RunReport& report, ReportFormat format, const std::string& path);
void emit(const LocalityReport& report, ReportFormat format, const std::string& path);

} // namespace losa
