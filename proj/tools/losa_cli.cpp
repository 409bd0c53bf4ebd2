// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end for the LoSA engine. Talks to the shared library
// exclusively through the public C API.
#include "losa/losa.h"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitInvariant = 4;
constexpr int kExitInternal = 1;

int exit_code_for(losa_status status) {
    switch (status) {
    case LOSA_OK: return kExitOk;
    case LOSA_ERR_INVALID_ARG:
    case LOSA_ERR_CONFIG: return kExitUsage;
    case LOSA_ERR_IO:
    case LOSA_ERR_FORMAT: return kExitFormat;
    case LOSA_ERR_INVARIANT: return kExitInvariant;
    default: return kExitInternal;
    }
}

int report_failure(losa_status status) {
    std::fprintf(stderr, "error: %s (%s)\n", losa_last_error(), losa_status_name(status));
    return exit_code_for(status);
}

struct WorkloadDeleter {
    void operator()(losa_workload* w) const { losa_workload_free(w); }
};
struct ReportDeleter {
    void operator()(losa_report* r) const { losa_report_free(r); }
};
using WorkloadPtr = std::unique_ptr<losa_workload, WorkloadDeleter>;
using ReportPtr = std::unique_ptr<losa_report, ReportDeleter>;

struct GenFlags {
    losa_gen_config cfg{};
    std::string pattern = "window";
    std::string output;
};

struct RunFlags {
    std::string trace;
    std::string output;
    std::string method = "losa";
    std::string policy = "topk";
    std::string signal = "q";
    std::string format = "csv";
    losa_engine_config cfg{};
    bool per_head = false;
};

void add_engine_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--trace,-i", f.trace, "Input trace file")->required();
    cmd->add_option("--output,-o", f.output, "Report output path")->required();
    cmd->add_option("--budget", f.cfg.budget, "Prefix positions per query")->capture_default_str();
    cmd->add_option("--page", f.cfg.page_size, "Selector page size")->capture_default_str();
    cmd->add_option("--kactive", f.cfg.k_active, "Active tokens for the topk policy")->capture_default_str();
    cmd->add_option("--tau", f.cfg.tau, "Cumulative-mass threshold for the threshold policy")->capture_default_str();
    cmd->add_option("--policy", f.policy, "Active-token policy")->capture_default_str()
        ->check(CLI::IsMember({"topk", "threshold"}));
    cmd->add_option("--signal", f.signal, "Locality signal")->capture_default_str()
        ->check(CLI::IsMember({"q", "qkv"}));
    cmd->add_option("--format", f.format, "Report format")->capture_default_str()
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_flag("--per-head", f.per_head, "Include per-head records (JSON only)");
}

losa_engine_config resolve_engine_config(const RunFlags& f) {
    losa_engine_config cfg = f.cfg;
    cfg.policy = f.policy == "topk" ? LOSA_POLICY_TOPK : LOSA_POLICY_THRESHOLD;
    cfg.signal = f.signal == "q" ? LOSA_SIGNAL_Q : LOSA_SIGNAL_QKV;
    return cfg;
}

losa_format resolve_format(const std::string& name) {
    return name == "json" ? LOSA_FORMAT_JSON : LOSA_FORMAT_CSV;
}

int load_workload(const std::string& path, WorkloadPtr& out) {
    losa_workload* raw = nullptr;
    const losa_status st = losa_workload_load(path.c_str(), &raw);
    if (st != LOSA_OK) return report_failure(st);
    out.reset(raw);
    return kExitOk;
}

void print_dims(const losa_workload* w) {
    losa_workload_dims dims{};
    losa_workload_get_dims(w, &dims);
    std::printf("H=%u d=%u L=%u B=%u S=%u\n", dims.heads, dims.head_dim, dims.prefix_len,
                dims.block_size, dims.steps);
}

int cmd_gen(const GenFlags& flags) {
    losa_gen_config cfg = flags.cfg;
    cfg.pattern = flags.pattern == "window" ? LOSA_PATTERN_WINDOW : LOSA_PATTERN_UNIFORM;

    losa_workload* raw = nullptr;
    losa_status st = losa_workload_generate(&cfg, &raw);
    if (st != LOSA_OK) return report_failure(st);
    WorkloadPtr w(raw);

    st = losa_workload_save(w.get(), flags.output.c_str());
    if (st != LOSA_OK) return report_failure(st);

    std::printf("wrote %s: ", flags.output.c_str());
    print_dims(w.get());
    return kExitOk;
}

void print_summary(const losa_report* report) {
    losa_run_summary s{};
    if (losa_report_get_summary(report, &s) != LOSA_OK) return;
    static const char* names[3] = {"dense", "quest", "losa"};
    for (int m = 0; m < 3; ++m) {
        if (std::isnan(s.mean_density[m])) continue;
        std::printf("%s: mean density %.6f, max abs err %.3g\n", names[m], s.mean_density[m],
                    s.max_abs_err[m]);
    }
    if (!std::isnan(s.density_ratio))
        std::printf("density ratio quest/losa: %.4f\n", s.density_ratio);
}

int cmd_run(const RunFlags& flags) {
    WorkloadPtr w;
    if (const int rc = load_workload(flags.trace, w); rc != kExitOk) return rc;

    losa_method method = LOSA_METHOD_LOSA;
    if (flags.method == "dense") method = LOSA_METHOD_DENSE;
    else if (flags.method == "quest") method = LOSA_METHOD_QUEST;

    const losa_engine_config cfg = resolve_engine_config(flags);
    losa_report* raw = nullptr;
    losa_status st = losa_run(w.get(), &cfg, method, flags.per_head ? 1 : 0, &raw);
    if (st != LOSA_OK) return report_failure(st);
    ReportPtr report(raw);

    st = losa_report_write(report.get(), resolve_format(flags.format), flags.output.c_str());
    if (st != LOSA_OK) return report_failure(st);

    std::printf("wrote %s\n", flags.output.c_str());
    print_summary(report.get());
    return kExitOk;
}

int cmd_compare(const RunFlags& flags) {
    WorkloadPtr w;
    if (const int rc = load_workload(flags.trace, w); rc != kExitOk) return rc;

    const losa_engine_config cfg = resolve_engine_config(flags);
    losa_report* raw = nullptr;
    losa_status st = losa_compare(w.get(), &cfg, flags.per_head ? 1 : 0, &raw);
    if (st != LOSA_OK) return report_failure(st);
    ReportPtr report(raw);

    st = losa_report_write(report.get(), resolve_format(flags.format), flags.output.c_str());
    if (st != LOSA_OK) return report_failure(st);

    std::printf("wrote %s\n", flags.output.c_str());
    print_summary(report.get());
    return kExitOk;
}

struct LocalityFlags {
    std::string trace;
    std::string output;
    std::string signal = "q";
    std::string format = "csv";
    double tau = 0.5;
};

int cmd_locality_stats(const LocalityFlags& flags) {
    WorkloadPtr w;
    if (const int rc = load_workload(flags.trace, w); rc != kExitOk) return rc;

    losa_report* raw = nullptr;
    losa_status st = losa_locality_stats(
        w.get(), flags.tau, flags.signal == "q" ? LOSA_SIGNAL_Q : LOSA_SIGNAL_QKV, &raw);
    if (st != LOSA_OK) return report_failure(st);
    ReportPtr report(raw);

    st = losa_report_write(report.get(), resolve_format(flags.format), flags.output.c_str());
    if (st != LOSA_OK) return report_failure(st);

    std::printf("wrote %s\n", flags.output.c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LoSA: locality-aware sparse prefix attention benchmark"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read key=value defaults from a file");
    app.failure_message(CLI::FailureMessage::simple);

    GenFlags gen;
    losa_gen_config_default(&gen.cfg);
    CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a synthetic denoising trace");
    gen_cmd->add_option("--L", gen.cfg.prefix_len, "Prefix length")->capture_default_str();
    gen_cmd->add_option("--B", gen.cfg.block_size, "Block size")->capture_default_str();
    gen_cmd->add_option("--d", gen.cfg.head_dim, "Head dimension")->capture_default_str();
    gen_cmd->add_option("--H", gen.cfg.heads, "Head count")->capture_default_str();
    gen_cmd->add_option("--steps", gen.cfg.steps, "Denoising steps")->capture_default_str();
    gen_cmd->add_option("--active-fraction", gen.cfg.active_fraction,
                        "Fraction of block rows perturbed per step")->capture_default_str();
    gen_cmd->add_option("--sigma", gen.cfg.perturb_scale, "Perturbation noise std")->capture_default_str();
    gen_cmd->add_option("--base-scale", gen.cfg.base_scale, "Std of the initial draw")->capture_default_str();
    gen_cmd->add_option("--seed", gen.cfg.seed, "Generator seed")->capture_default_str();
    gen_cmd->add_option("--pattern", gen.pattern, "Perturbation pattern")->capture_default_str()
        ->check(CLI::IsMember({"window", "uniform"}));
    gen_cmd->add_option("--output,-o", gen.output, "Trace output path")->required();

    RunFlags run;
    losa_engine_config_default(&run.cfg);
    CLI::App* run_cmd = app.add_subcommand("run", "Run one method over a trace");
    run_cmd->add_option("--method", run.method, "Attention method")
        ->required()
        ->check(CLI::IsMember({"dense", "quest", "losa"}));
    add_engine_flags(run_cmd, run);

    RunFlags compare;
    losa_engine_config_default(&compare.cfg);
    CLI::App* compare_cmd =
        app.add_subcommand("compare", "Run dense, quest and losa on the same trace");
    add_engine_flags(compare_cmd, compare);

    LocalityFlags locality;
    CLI::App* locality_cmd =
        app.add_subcommand("locality-stats", "Per-step locality score diagnostics");
    locality_cmd->add_option("--trace,-i", locality.trace, "Input trace file")->required();
    locality_cmd->add_option("--output,-o", locality.output, "Report output path")->required();
    locality_cmd->add_option("--tau", locality.tau, "Cumulative-mass threshold")->capture_default_str();
    locality_cmd->add_option("--signal", locality.signal, "Locality signal")->capture_default_str()
        ->check(CLI::IsMember({"q", "qkv"}));
    locality_cmd->add_option("--format", locality.format, "Report format")->capture_default_str()
        ->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e); // prints the message
        return kExitUsage;
    }

    if (gen_cmd->parsed()) return cmd_gen(gen);
    if (run_cmd->parsed()) return cmd_run(run);
    if (compare_cmd->parsed()) return cmd_compare(compare);
    if (locality_cmd->parsed()) return cmd_locality_stats(locality);
    return kExitUsage;
}
