/* SPDX-License-Identifier: Apache-2.0
 *
 * Public C API of the LoSA attention engine. The library is a plain shared
 * object with opaque handles and status codes; every entry point is safe to
 * call from C. On failure, losa_last_error() returns a thread-local
 * description of the most recent error.
 */
#ifndef LOSA_H
#define LOSA_H

#include <stdint.h>

#if defined(_WIN32)
#define LOSA_API __declspec(dllexport)
#else
#define LOSA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum losa_status {
    LOSA_OK = 0,
    LOSA_ERR_INVALID_ARG = 1,
    LOSA_ERR_SHAPE = 2,
    LOSA_ERR_CONFIG = 3,
    LOSA_ERR_STATE = 4,
    LOSA_ERR_INDEX = 5,
    LOSA_ERR_IO = 6,
    LOSA_ERR_FORMAT = 7,
    LOSA_ERR_INVARIANT = 8,
    LOSA_ERR_INTERNAL = 9
} losa_status;

typedef enum losa_method {
    LOSA_METHOD_DENSE = 0,
    LOSA_METHOD_QUEST = 1,
    LOSA_METHOD_LOSA = 2
} losa_method;

typedef enum losa_policy {
    LOSA_POLICY_TOPK = 0,
    LOSA_POLICY_THRESHOLD = 1
} losa_policy;

typedef enum losa_signal {
    LOSA_SIGNAL_Q = 0,
    LOSA_SIGNAL_QKV = 1
} losa_signal;

typedef enum losa_format {
    LOSA_FORMAT_CSV = 0,
    LOSA_FORMAT_JSON = 1
} losa_format;

typedef enum losa_pattern {
    LOSA_PATTERN_WINDOW = 0,
    LOSA_PATTERN_UNIFORM = 1
} losa_pattern;

/* Opaque handles. Free with the matching *_free function. */
typedef struct losa_workload losa_workload;
typedef struct losa_report losa_report;

typedef struct losa_gen_config {
    uint32_t heads;
    uint32_t head_dim;
    uint32_t prefix_len; /* L */
    uint32_t block_size; /* B */
    uint32_t steps;      /* S */
    double active_fraction;
    double perturb_scale;
    double base_scale;
    uint64_t seed;
    int pattern; /* losa_pattern */
} losa_gen_config;

typedef struct losa_engine_config {
    uint32_t budget;    /* prefix positions per query */
    uint32_t page_size; /* selector page size */
    int policy;         /* losa_policy */
    uint32_t k_active;  /* top-k active tokens (topk policy) */
    double tau;         /* cumulative-mass threshold (threshold policy) */
    int signal;         /* losa_signal */
} losa_engine_config;

typedef struct losa_workload_dims {
    uint32_t heads;
    uint32_t head_dim;
    uint32_t prefix_len;
    uint32_t block_size;
    uint32_t steps;
} losa_workload_dims;

/* Per-method summary, indexed by losa_method. Absent methods are NaN. */
typedef struct losa_run_summary {
    double mean_density[3];
    double max_abs_err[3];
    double density_ratio; /* quest/losa over shared sparse steps; NaN if absent */
} losa_run_summary;

LOSA_API uint32_t losa_abi_version(void);
LOSA_API const char* losa_status_name(losa_status status);
LOSA_API const char* losa_last_error(void);

LOSA_API void losa_gen_config_default(losa_gen_config* cfg);
LOSA_API void losa_engine_config_default(losa_engine_config* cfg);

LOSA_API losa_status losa_workload_generate(const losa_gen_config* cfg, losa_workload** out);
LOSA_API losa_status losa_workload_load(const char* path, losa_workload** out);
LOSA_API losa_status losa_workload_save(const losa_workload* workload, const char* path);
LOSA_API losa_status losa_workload_get_dims(const losa_workload* workload,
                                            losa_workload_dims* out);
LOSA_API void losa_workload_free(losa_workload* workload);

/* Runs one method over every step of the workload. Sparse methods are scored
 * against a dense run internally. per_head_records adds per-head rows to the
 * JSON output. */
LOSA_API losa_status losa_run(const losa_workload* workload, const losa_engine_config* cfg,
                              losa_method method, int per_head_records, losa_report** out);

/* Runs dense, quest and losa on the same workload and summarizes the
 * quest/losa density ratio. */
LOSA_API losa_status losa_compare(const losa_workload* workload, const losa_engine_config* cfg,
                                  int per_head_records, losa_report** out);

/* Per-step locality diagnostics at the given threshold. */
LOSA_API losa_status losa_locality_stats(const losa_workload* workload, double tau,
                                         losa_signal signal, losa_report** out);

LOSA_API losa_status losa_report_write(const losa_report* report, losa_format format,
                                       const char* path);

/* Renders the report to text; free the result with losa_string_free. */
LOSA_API losa_status losa_report_render(const losa_report* report, losa_format format,
                                        char** out_text);

/* Only valid for reports produced by losa_run / losa_compare. */
LOSA_API losa_status losa_report_get_summary(const losa_report* report, losa_run_summary* out);

LOSA_API void losa_string_free(char* text);
LOSA_API void losa_report_free(losa_report* report);

#ifdef __cplusplus
}
#endif

#endif /* LOSA_H */
