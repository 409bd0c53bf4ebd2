// SPDX-License-Identifier: Apache-2.0
#include "losa/losa.h"

#include <cmath>
#include <cstring>
#include <new>
#include <string>
#include <variant>

#include "core/engine.hpp"
#include "core/report.hpp"
#include "core/workload.hpp"

struct losa_workload {
    losa::DenoiseWorkload w;
};

struct losa_report {
    std::variant<losa::RunReport, losa::LocalityReport> rep;
};

namespace {

thread_local std::string t_last_error;

losa_status map_code(losa::ErrorCode code) {
    switch (code) {
    case losa::ErrorCode::InvalidArgument: return LOSA_ERR_INVALID_ARG;
    case losa::ErrorCode::Shape: return LOSA_ERR_SHAPE;
    case losa::ErrorCode::Config: return LOSA_ERR_CONFIG;
    case losa::ErrorCode::State: return LOSA_ERR_STATE;
    case losa::ErrorCode::Index: return LOSA_ERR_INDEX;
    case losa::ErrorCode::Io: return LOSA_ERR_IO;
    case losa::ErrorCode::Format: return LOSA_ERR_FORMAT;
    case losa::ErrorCode::Invariant: return LOSA_ERR_INVARIANT;
    }
    return LOSA_ERR_INTERNAL;
}

losa_status fail(losa_status status, const char* msg) {
    t_last_error = msg;
    return status;
}

template <typename Fn>
losa_status guarded(Fn&& fn) {
    try {
        fn();
        t_last_error.clear();
        return LOSA_OK;
    } catch (const losa::Error& e) {
        t_last_error = e.what();
        return map_code(e.code());
    } catch (const std::bad_alloc&) {
        t_last_error = "out of memory";
        return LOSA_ERR_INTERNAL;
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return LOSA_ERR_INTERNAL;
    }
}

losa::EngineConfig to_engine_config(const losa_engine_config& c, const losa::DenoiseWorkload& w) {
    losa::require(c.policy == LOSA_POLICY_TOPK || c.policy == LOSA_POLICY_THRESHOLD,
                  losa::ErrorCode::Config, "unknown active policy");
    losa::require(c.signal == LOSA_SIGNAL_Q || c.signal == LOSA_SIGNAL_QKV,
                  losa::ErrorCode::Config, "unknown locality signal");
    losa::EngineConfig cfg;
    cfg.budget = c.budget;
    cfg.page_size = c.page_size;
    cfg.policy = c.policy == LOSA_POLICY_TOPK ? losa::ActivePolicy::TopK
                                              : losa::ActivePolicy::Threshold;
    cfg.k_active = c.k_active;
    cfg.tau = c.tau;
    cfg.signal = c.signal == LOSA_SIGNAL_Q ? losa::LocalitySignal::Query
                                           : losa::LocalitySignal::QueryKeyValue;
    cfg.heads = w.heads;
    cfg.head_dim = w.head_dim;
    cfg.validate();
    return cfg;
}

losa::Method to_method(losa_method m) {
    switch (m) {
    case LOSA_METHOD_DENSE: return losa::Method::Dense;
    case LOSA_METHOD_QUEST: return losa::Method::Quest;
    case LOSA_METHOD_LOSA: return losa::Method::Losa;
    }
    losa::raise(losa::ErrorCode::InvalidArgument, "unknown method");
}

losa::ReportFormat to_format(losa_format f) {
    switch (f) {
    case LOSA_FORMAT_CSV: return losa::ReportFormat::Csv;
    case LOSA_FORMAT_JSON: return losa::ReportFormat::Json;
    }
    losa::raise(losa::ErrorCode::InvalidArgument, "unknown report format");
}

} // namespace

extern "C" {

uint32_t losa_abi_version(void) {
    return 1;
}

const char* losa_status_name(losa_status status) {
    switch (status) {
    case LOSA_OK: return "ok";
    case LOSA_ERR_INVALID_ARG: return "invalid_argument";
    case LOSA_ERR_SHAPE: return "shape_error";
    case LOSA_ERR_CONFIG: return "config_error";
    case LOSA_ERR_STATE: return "state_error";
    case LOSA_ERR_INDEX: return "index_error";
    case LOSA_ERR_IO: return "io_error";
    case LOSA_ERR_FORMAT: return "format_error";
    case LOSA_ERR_INVARIANT: return "invariant_violation";
    case LOSA_ERR_INTERNAL: return "internal_error";
    }
    return "unknown";
}

const char* losa_last_error(void) {
    return t_last_error.c_str();
}

void losa_gen_config_default(losa_gen_config* cfg) {
    if (!cfg) return;
    losa::GenConfig d;
    cfg->heads = d.heads;
    cfg->head_dim = d.head_dim;
    cfg->prefix_len = d.prefix_len;
    cfg->block_size = d.block_size;
    cfg->steps = d.steps;
    cfg->active_fraction = d.active_fraction;
    cfg->perturb_scale = d.perturb_scale;
    cfg->base_scale = d.base_scale;
    cfg->seed = d.seed;
    cfg->pattern = LOSA_PATTERN_WINDOW;
}

void losa_engine_config_default(losa_engine_config* cfg) {
    if (!cfg) return;
    losa::EngineConfig d;
    cfg->budget = d.budget;
    cfg->page_size = d.page_size;
    cfg->policy = LOSA_POLICY_TOPK;
    cfg->k_active = d.k_active;
    cfg->tau = d.tau;
    cfg->signal = LOSA_SIGNAL_Q;
}

losa_status losa_workload_generate(const losa_gen_config* cfg, losa_workload** out) {
    if (!cfg || !out) return fail(LOSA_ERR_INVALID_ARG, "null argument");
    *out = nullptr;
    return guarded([&] {
        losa::require(cfg->pattern == LOSA_PATTERN_WINDOW || cfg->pattern == LOSA_PATTERN_UNIFORM,
                      losa::ErrorCode::Config, "unknown perturbation pattern");
        losa::GenConfig gc;
        gc.heads = cfg->heads;
        gc.head_dim = cfg->head_dim;
        gc.prefix_len = cfg->prefix_len;
        gc.block_size = cfg->block_size;
        gc.steps = cfg->steps;
        gc.active_fraction = cfg->active_fraction;
        gc.perturb_scale = cfg->perturb_scale;
        gc.base_scale = cfg->base_scale;
        gc.seed = cfg->seed;
        gc.pattern = cfg->pattern == LOSA_PATTERN_WINDOW ? losa::PerturbPattern::Window
                                                         : losa::PerturbPattern::UniformRows;
        *out = new losa_workload{losa::gen_synthetic(gc)};
    });
}

losa_status losa_workload_load(const char* path, losa_workload** out) {
    if (!path || !out) return fail(LOSA_ERR_INVALID_ARG, "null argument");
    *out = nullptr;
    return guarded([&] { *out = new losa_workload{losa::load_trace(path)}; });
}

losa_status losa_workload_save(const losa_workload* workload, const char* path) {
    if (!workload || !path) return fail(LOSA_ERR_INVALID_ARG, "null argument");
    return guarded([&] { losa::save_trace(workload->w, path); });
}

losa_status losa_workload_get_dims(const losa_workload* workload, losa_workload_dims* out) {
    if (!workload || !out) return fail(LOSA_ERR_INVALID_ARG, "null argument");
    out->heads = workload->w.heads;
    out->head_dim = workload->w.head_dim;
    out->prefix_len = workload->w.prefix_len;
    out->block_size = workload->w.block_size;
    out->steps = workload->w.step_count();
    return LOSA_OK;
}

void losa_workload_free(losa_workload* workload) {
    delete workload;
}

losa_status losa_run(const losa_workload* workload, const losa_engine_config* cfg,
                     losa_method method, int per_head_records, losa_report** out) {
    if (!workload || !cfg || !out) return fail(LOSA_ERR_INVALID_ARG, "null argument");
    *out = nullptr;
    return guarded([&] {
        const losa::EngineConfig ec = to_engine_config(*cfg, workload->w);
        *out = new losa_report{
            losa::run_and_report(workload->w, ec, to_method(method), per_head_records != 0)};
    });
}

losa_status losa_compare(const losa_workload* workload, const losa_engine_config* cfg,
                         int per_head_records, losa_report** out) {
    if (!workload || !cfg || !out) return fail(LOSA_ERR_INVALID_ARG, "null argument");
    *out = nullptr;
    return guarded([&] {
        const losa::EngineConfig ec = to_engine_config(*cfg, workload->w);
        *out = new losa_report{
            losa::compare_and_report(workload->w, ec, per_head_records != 0)};
    });
}

losa_status losa_locality_stats(const losa_workload* workload, double tau, losa_signal signal,
                                losa_report** out) {
    if (!workload || !out) return fail(LOSA_ERR_INVALID_ARG, "null argument");
    *out = nullptr;
    return guarded([&] {
        losa::require(signal == LOSA_SIGNAL_Q || signal == LOSA_SIGNAL_QKV,
                      losa::ErrorCode::Config, "unknown locality signal");
        const losa::LocalitySignal s = signal == LOSA_SIGNAL_Q
                                           ? losa::LocalitySignal::Query
                                           : losa::LocalitySignal::QueryKeyValue;
        *out = new losa_report{losa::locality_stats(workload->w, tau, s)};
    });
}

losa_status losa_report_write(const losa_report* report, losa_format format, const char* path) {
    if (!report || !path) return fail(LOSA_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        const losa::ReportFormat f = to_format(format);
        std::visit([&](const auto& rep) { losa::emit(rep, f, path); }, report->rep);
    });
}

losa_status losa_report_render(const losa_report* report, losa_format format, char** out_text) {
    if (!report || !out_text) return fail(LOSA_ERR_INVALID_ARG, "null argument");
    *out_text = nullptr;
    return guarded([&] {
        const losa::ReportFormat f = to_format(format);
        const std::string text =
            std::visit([&](const auto& rep) { return losa::render(rep, f); }, report->rep);
        char* buf = new char[text.size() + 1];
        std::memcpy(buf, text.c_str(), text.size() + 1);
        *out_text = buf;
    });
}

losa_status losa_report_get_summary(const losa_report* report, losa_run_summary* out) {
    if (!report || !out) return fail(LOSA_ERR_INVALID_ARG, "null argument");
    const auto* run = std::get_if<losa::RunReport>(&report->rep);
    if (!run) return fail(LOSA_ERR_INVALID_ARG, "report has no run summary");
    const double nan = std::nan("");
    for (int i = 0; i < 3; ++i) {
        out->mean_density[i] = nan;
        out->max_abs_err[i] = nan;
    }
    for (const losa::MethodSummary& s : run->summary) {
        int idx = -1;
        if (s.method == "dense") idx = LOSA_METHOD_DENSE;
        else if (s.method == "quest") idx = LOSA_METHOD_QUEST;
        else if (s.method == "losa") idx = LOSA_METHOD_LOSA;
        if (idx >= 0) {
            out->mean_density[idx] = s.mean_density;
            out->max_abs_err[idx] = s.max_abs_err;
        }
    }
    out->density_ratio = run->has_density_ratio ? run->quest_losa_density_ratio : nan;
    return LOSA_OK;
}

void losa_string_free(char* text) {
    delete[] text;
}

void losa_report_free(losa_report* report) {
    delete report;
}

} // extern "C"
