// SPDX-License-Identifier: Apache-2.0
#include "core/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace losa {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string sig9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// JSON numbers go through the same 9-digit decimal text as the CSV so both
// formats carry identical values.
double sig9_value(double v) {
    return std::strtod(sig9(v).c_str(), nullptr);
}

const char* policy_name(ActivePolicy p) {
    return p == ActivePolicy::TopK ? "topk" : "threshold";
}

const char* signal_name(LocalitySignal s) {
    return s == LocalitySignal::Query ? "q" : "qkv";
}

Matrix stack_heads(const std::vector<Matrix>& per_head) {
    const size_t rows = per_head[0].rows();
    const size_t cols = per_head[0].cols();
    Matrix out(rows * per_head.size(), cols);
    for (size_t h = 0; h < per_head.size(); ++h)
        for (size_t i = 0; i < rows; ++i)
            std::copy_n(per_head[h].row(i).data(), cols, out.row(h * rows + i).data());
    return out;
}

void fill_errors(RunResult& run, const RunResult& oracle) {
    for (size_t t = 0; t < run.stats.size(); ++t) {
        const ErrorMetrics em =
            compute_error(stack_heads(run.outputs[t]), stack_heads(oracle.outputs[t]));
        run.stats[t].max_abs_err = em.max_abs_err;
        run.stats[t].mse = em.mse;
        run.stats[t].rel_fro_err = em.rel_fro_err;
    }
}

RunRecord make_record(const StepStats& s) {
    RunRecord r;
    r.step = s.step;
    r.method = method_name(s.method);
    r.active_count = s.active_count;
    r.union_pages = float(s.union_pages);
    r.pages_total = s.pages_total;
    r.density = float(s.density);
    r.kv_elements_loaded = float(s.kv_elements_loaded);
    r.max_abs_err = float(s.max_abs_err);
    r.mse = float(s.mse);
    r.rel_fro_err = float(s.rel_fro_err);
    return r;
}

void append_head_records(std::vector<HeadRecord>& out, const std::vector<StepStats>& stats) {
    for (const StepStats& s : stats)
        for (const HeadStepStats& h : s.per_head) {
            HeadRecord r;
            r.step = s.step;
            r.method = method_name(s.method);
            r.head = h.head;
            r.union_pages = h.union_page_count;
            r.density = float(h.density);
            r.kv_elements_loaded = float(h.kv_elements_loaded);
            out.push_back(std::move(r));
        }
}

MethodSummary summarize(const char* name, const std::vector<StepStats>& stats) {
    MethodSummary s;
    s.method = name;
    double density = 0.0, max_err = 0.0;
    for (const StepStats& st : stats) {
        density += st.density;
        max_err = std::max(max_err, st.max_abs_err);
    }
    s.mean_density = float(density / double(stats.size()));
    s.max_abs_err = float(max_err);
    return s;
}

// Densities of the shared sparse steps (t >= 1): the losa dense init has no
// quest counterpart, so the ratio compares the steps where both selected.
MethodDensities sparse_step_densities(const std::string& provenance,
                                      const std::vector<StepStats>& stats) {
    MethodDensities out;
    out.provenance = provenance;
    for (const StepStats& s : stats)
        if (s.step >= 1) out.densities.push_back(s.density);
    return out;
}

void echo_dims(RunReport& r, const DenoiseWorkload& w) {
    r.heads = w.heads;
    r.head_dim = w.head_dim;
    r.prefix_len = w.prefix_len;
    r.block_size = w.block_size;
    r.steps = w.step_count();
}

void write_file(const std::string& text, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    require(os.good(), ErrorCode::Io, "cannot open report file for writing");
    os.write(text.data(), std::streamsize(text.size()));
    os.flush();
    require(os.good(), ErrorCode::Io, "write failure while saving report");
}

ordered_json config_json(const RunReport& r) {
    ordered_json c;
    c["heads"] = r.heads;
    c["head_dim"] = r.head_dim;
    c["prefix_len"] = r.prefix_len;
    c["block_size"] = r.block_size;
    c["steps"] = r.steps;
    c["budget"] = r.config.budget;
    c["page_size"] = r.config.page_size;
    c["policy"] = policy_name(r.config.policy);
    c["k_active"] = r.config.k_active;
    c["tau"] = sig9_value(r.config.tau);
    c["signal"] = signal_name(r.config.signal);
    return c;
}

} // namespace

ErrorMetrics compute_error(const Matrix& method_output, const Matrix& dense_output) {
    require(method_output.rows() == dense_output.rows() &&
                method_output.cols() == dense_output.cols(),
            ErrorCode::Shape, "compute_error: shape mismatch");
    ErrorMetrics em;
    double sq_sum = 0.0, ref_sq_sum = 0.0;
    const auto got = method_output.data();
    const auto want = dense_output.data();
    for (size_t i = 0; i < got.size(); ++i) {
        const double diff = double(got[i]) - double(want[i]);
        em.max_abs_err = std::max(em.max_abs_err, std::abs(diff));
        sq_sum += diff * diff;
        ref_sq_sum += double(want[i]) * double(want[i]);
    }
    if (!got.empty()) em.mse = sq_sum / double(got.size());
    em.rel_fro_err = ref_sq_sum > 0.0 ? std::sqrt(sq_sum) / std::sqrt(ref_sq_sum) : 0.0;
    return em;
}

double density_ratio(const MethodDensities& quest, const MethodDensities& losa) {
    require(!quest.densities.empty() && !losa.densities.empty(), ErrorCode::InvalidArgument,
            "density_ratio over empty density sequences");
    require(quest.provenance == losa.provenance, ErrorCode::InvalidArgument,
            "density_ratio: provenance mismatch between runs");
    const double qm = std::accumulate(quest.densities.begin(), quest.densities.end(), 0.0) /
                      double(quest.densities.size());
    const double lm = std::accumulate(losa.densities.begin(), losa.densities.end(), 0.0) /
                      double(losa.densities.size());
    if (lm == 0.0) return std::numeric_limits<double>::infinity();
    return qm / lm;
}

RunReport run_and_report(const DenoiseWorkload& w, const EngineConfig& cfg, Method method,
                         bool per_head_records) {
    RunResult run = run_block(w, cfg, method);
    if (method != Method::Dense) {
        const RunResult oracle = run_block(w, cfg, Method::Dense);
        fill_errors(run, oracle);
    }

    RunReport r;
    r.provenance = w.source;
    r.config = cfg;
    echo_dims(r, w);
    for (const StepStats& s : run.stats)
        r.records.push_back(make_record(s));
    if (per_head_records) append_head_records(r.per_head, run.stats);
    r.summary.push_back(summarize(method_name(method), run.stats));
    return r;
}

RunReport compare_and_report(const DenoiseWorkload& w, const EngineConfig& cfg,
                             bool per_head_records) {
    const RunResult dense = run_block(w, cfg, Method::Dense);
    RunResult quest = run_block(w, cfg, Method::Quest);
    RunResult losa_run = run_block(w, cfg, Method::Losa);
    fill_errors(quest, dense);
    fill_errors(losa_run, dense);

    RunReport r;
    r.provenance = w.source;
    r.config = cfg;
    echo_dims(r, w);
    for (size_t t = 0; t < dense.stats.size(); ++t) {
        r.records.push_back(make_record(dense.stats[t]));
        r.records.push_back(make_record(quest.stats[t]));
        r.records.push_back(make_record(losa_run.stats[t]));
    }
    if (per_head_records) {
        append_head_records(r.per_head, dense.stats);
        append_head_records(r.per_head, quest.stats);
        append_head_records(r.per_head, losa_run.stats);
        std::stable_sort(r.per_head.begin(), r.per_head.end(),
                         [](const HeadRecord& a, const HeadRecord& b) {
                             if (a.step != b.step) return a.step < b.step;
                             return a.head < b.head;
                         });
    }
    r.summary.push_back(summarize("dense", dense.stats));
    r.summary.push_back(summarize("quest", quest.stats));
    r.summary.push_back(summarize("losa", losa_run.stats));

    const MethodDensities qd = sparse_step_densities(r.provenance, quest.stats);
    const MethodDensities ld = sparse_step_densities(r.provenance, losa_run.stats);
    if (!qd.densities.empty() && !ld.densities.empty()) {
        r.quest_losa_density_ratio = density_ratio(qd, ld);
        r.has_density_ratio = true;
    }
    return r;
}

LocalityReport locality_stats(const DenoiseWorkload& w, double tau, LocalitySignal signal) {
    require(std::isfinite(tau) && tau > 0.0 && tau <= 1.0, ErrorCode::Config,
            "tau must be in (0, 1]");
    require(w.step_count() >= 1, ErrorCode::InvalidArgument, "workload has no steps");

    LocalityReport r;
    r.provenance = w.source;
    r.heads = w.heads;
    r.head_dim = w.head_dim;
    r.prefix_len = w.prefix_len;
    r.block_size = w.block_size;
    r.steps = w.step_count();
    r.tau = tau;
    r.signal = signal;

    auto concat = [](const std::vector<Matrix>& per_head) {
        const size_t rows = per_head[0].rows();
        const size_t cols = per_head[0].cols();
        Matrix out(rows, cols * per_head.size());
        for (size_t h = 0; h < per_head.size(); ++h)
            for (size_t i = 0; i < rows; ++i)
                std::copy_n(per_head[h].row(i).data(), cols, out.row(i).data() + h * cols);
        return out;
    };

    for (uint32_t t = 1; t < w.step_count(); ++t) {
        LocalityScores delta =
            locality_scores(concat(w.steps[t].queries), concat(w.steps[t - 1].queries));
        if (signal == LocalitySignal::QueryKeyValue) {
            const LocalityScores dk =
                locality_scores(concat(w.steps[t].keys), concat(w.steps[t - 1].keys));
            const LocalityScores dv =
                locality_scores(concat(w.steps[t].values), concat(w.steps[t - 1].values));
            for (size_t i = 0; i < delta.delta.size(); ++i)
                delta.delta[i] = (delta.delta[i] + dk.delta[i] + dv.delta[i]) / 3.0;
        }

        std::vector<uint32_t> order(delta.delta.size());
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
            if (delta.delta[a] != delta.delta[b]) return delta.delta[a] > delta.delta[b];
            return a < b;
        });
        double total = 0.0;
        for (uint32_t tok : order) total += delta.delta[tok];

        const ActiveSet sel = select_active_threshold(delta, tau);
        std::vector<bool> selected(delta.delta.size(), false);
        for (uint32_t tok : sel.indices) selected[tok] = true;

        double cum = 0.0;
        for (uint32_t rank = 0; rank < order.size(); ++rank) {
            const uint32_t tok = order[rank];
            cum += delta.delta[tok];
            LocalityEntry e;
            e.step = t;
            e.rank = rank;
            e.token = tok;
            e.delta = float(delta.delta[tok]);
            e.cumulative_fraction = total > 0.0 ? float(cum / total) : 0.0f;
            e.selected = selected[tok];
            r.entries.push_back(e);
        }
        r.tau_counts.push_back(uint32_t(sel.indices.size()));
    }
    return r;
}

std::string render(const RunReport& r, ReportFormat format) {
    if (format == ReportFormat::Csv) {
        std::string out = "step,method,active_count,union_pages,pages_total,density,"
                          "kv_elements_loaded,max_abs_err,mse,rel_fro_err\n";
        for (const RunRecord& rec : r.records) {
            out += std::to_string(rec.step) + ',' + rec.method + ',' +
                   std::to_string(rec.active_count) + ',' + sig9(rec.union_pages) + ',' +
                   std::to_string(rec.pages_total) + ',' + sig9(rec.density) + ',' +
                   sig9(rec.kv_elements_loaded) + ',' + sig9(rec.max_abs_err) + ',' +
                   sig9(rec.mse) + ',' + sig9(rec.rel_fro_err) + '\n';
        }
        return out;
    }

    ordered_json j;
    j["schema_version"] = 1;
    j["provenance"] = r.provenance;
    j["config"] = config_json(r);
    j["records"] = ordered_json::array();
    for (const RunRecord& rec : r.records) {
        ordered_json o;
        o["step"] = rec.step;
        o["method"] = rec.method;
        o["active_count"] = rec.active_count;
        o["union_pages"] = sig9_value(rec.union_pages);
        o["pages_total"] = rec.pages_total;
        o["density"] = sig9_value(rec.density);
        o["kv_elements_loaded"] = sig9_value(rec.kv_elements_loaded);
        o["max_abs_err"] = sig9_value(rec.max_abs_err);
        o["mse"] = sig9_value(rec.mse);
        o["rel_fro_err"] = sig9_value(rec.rel_fro_err);
        j["records"].push_back(std::move(o));
    }
    if (!r.per_head.empty()) {
        j["per_head_records"] = ordered_json::array();
        for (const HeadRecord& rec : r.per_head) {
            ordered_json o;
            o["step"] = rec.step;
            o["method"] = rec.method;
            o["head"] = rec.head;
            o["union_pages"] = rec.union_pages;
            o["density"] = sig9_value(rec.density);
            o["kv_elements_loaded"] = sig9_value(rec.kv_elements_loaded);
            j["per_head_records"].push_back(std::move(o));
        }
    }
    ordered_json summary;
    summary["methods"] = ordered_json::array();
    for (const MethodSummary& s : r.summary) {
        ordered_json o;
        o["method"] = s.method;
        o["mean_density"] = sig9_value(s.mean_density);
        o["max_abs_err"] = sig9_value(s.max_abs_err);
        summary["methods"].push_back(std::move(o));
    }
    if (r.has_density_ratio) {
        if (std::isinf(r.quest_losa_density_ratio))
            summary["density_ratio"] = "inf";
        else
            summary["density_ratio"] = sig9_value(r.quest_losa_density_ratio);
    }
    j["summary"] = std::move(summary);
    return j.dump(2) + "\n";
}

std::string render(const LocalityReport& r, ReportFormat format) {
    if (format == ReportFormat::Csv) {
        std::string out = "step,rank,token,delta,cum_fraction,selected,tau_count\n";
        for (const LocalityEntry& e : r.entries) {
            out += std::to_string(e.step) + ',' + std::to_string(e.rank) + ',' +
                   std::to_string(e.token) + ',' + sig9(e.delta) + ',' +
                   sig9(e.cumulative_fraction) + ',' + (e.selected ? "1" : "0") + ',' +
                   std::to_string(r.tau_counts[e.step - 1]) + '\n';
        }
        return out;
    }

    ordered_json j;
    j["schema_version"] = 1;
    j["provenance"] = r.provenance;
    ordered_json c;
    c["heads"] = r.heads;
    c["head_dim"] = r.head_dim;
    c["prefix_len"] = r.prefix_len;
    c["block_size"] = r.block_size;
    c["steps"] = r.steps;
    c["tau"] = sig9_value(r.tau);
    c["signal"] = signal_name(r.signal);
    j["config"] = std::move(c);
    j["steps_compared"] = ordered_json::array();
    size_t idx = 0;
    for (uint32_t t = 1; t < r.steps && idx < r.entries.size(); ++t) {
        ordered_json step;
        step["step"] = t;
        step["tau_count"] = r.tau_counts[t - 1];
        step["tokens"] = ordered_json::array();
        while (idx < r.entries.size() && r.entries[idx].step == t) {
            const LocalityEntry& e = r.entries[idx];
            ordered_json o;
            o["rank"] = e.rank;
            o["token"] = e.token;
            o["delta"] = sig9_value(e.delta);
            o["cum_fraction"] = sig9_value(e.cumulative_fraction);
            o["selected"] = e.selected;
            step["tokens"].push_back(std::move(o));
            ++idx;
        }
        j["steps_compared"].push_back(std::move(step));
    }
    return j.dump(2) + "\n";
}

void emit(const RunReport& report, ReportFormat format, const std::string& path) {
    write_file(render(report, format), path);
}

void emit(const LocalityReport& report, ReportFormat format, const std::string& path) {
    write_file(render(report, format), path);
}

} // namespace losa
