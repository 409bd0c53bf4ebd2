// SPDX-License-Identifier: Apache-2.0
//
// Exercises the public C surface of liblosa the way an external client
// would: opaque handles, status codes, last-error strings.
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "losa/losa.h"

namespace {

namespace fs = std::filesystem;

struct TempFile {
    fs::path path;
    explicit TempFile(const std::string& name) : path(fs::temp_directory_path() / name) {}
    ~TempFile() {
        std::error_code ec;
        fs::remove(path, ec);
    }
    std::string str() const { return path.string(); }
};

losa_gen_config small_gen() {
    losa_gen_config cfg{};
    losa_gen_config_default(&cfg);
    cfg.heads = 2;
    cfg.head_dim = 8;
    cfg.prefix_len = 64;
    cfg.block_size = 8;
    cfg.steps = 3;
    cfg.active_fraction = 0.25;
    cfg.seed = 5;
    return cfg;
}

} // namespace

TEST_CASE("workload lifecycle through the C API") {
    const losa_gen_config cfg = small_gen();
    losa_workload* w = nullptr;
    REQUIRE(losa_workload_generate(&cfg, &w) == LOSA_OK);

    losa_workload_dims dims{};
    REQUIRE(losa_workload_get_dims(w, &dims) == LOSA_OK);
    CHECK(dims.heads == 2);
    CHECK(dims.head_dim == 8);
    CHECK(dims.prefix_len == 64);
    CHECK(dims.block_size == 8);
    CHECK(dims.steps == 3);

    TempFile file("losa_capi_roundtrip.trace");
    REQUIRE(losa_workload_save(w, file.str().c_str()) == LOSA_OK);

    losa_workload* back = nullptr;
    REQUIRE(losa_workload_load(file.str().c_str(), &back) == LOSA_OK);
    losa_workload_dims dims2{};
    REQUIRE(losa_workload_get_dims(back, &dims2) == LOSA_OK);
    CHECK(std::memcmp(&dims, &dims2, sizeof(dims)) == 0);

    losa_workload_free(back);
    losa_workload_free(w);
}

TEST_CASE("run and compare through the C API") {
    const losa_gen_config gen = small_gen();
    losa_workload* w = nullptr;
    REQUIRE(losa_workload_generate(&gen, &w) == LOSA_OK);

    losa_engine_config cfg{};
    losa_engine_config_default(&cfg);
    cfg.budget = 16;
    cfg.page_size = 8;
    cfg.k_active = 2;

    SUBCASE("dense run has unit density and zero error") {
        losa_report* rep = nullptr;
        REQUIRE(losa_run(w, &cfg, LOSA_METHOD_DENSE, 0, &rep) == LOSA_OK);
        losa_run_summary s{};
        REQUIRE(losa_report_get_summary(rep, &s) == LOSA_OK);
        CHECK(s.mean_density[LOSA_METHOD_DENSE] == 1.0);
        CHECK(s.max_abs_err[LOSA_METHOD_DENSE] == 0.0);
        CHECK(std::isnan(s.mean_density[LOSA_METHOD_QUEST]));
        losa_report_free(rep);
    }
    SUBCASE("compare summarizes all three methods") {
        losa_report* rep = nullptr;
        REQUIRE(losa_compare(w, &cfg, 1, &rep) == LOSA_OK);
        losa_run_summary s{};
        REQUIRE(losa_report_get_summary(rep, &s) == LOSA_OK);
        for (int m = 0; m < 3; ++m) CHECK(!std::isnan(s.mean_density[m]));
        CHECK(s.density_ratio >= 1.0);

        TempFile csv("losa_capi_report.csv");
        REQUIRE(losa_report_write(rep, LOSA_FORMAT_CSV, csv.str().c_str()) == LOSA_OK);
        std::ifstream is(csv.str());
        std::string header;
        std::getline(is, header);
        CHECK(header == "step,method,active_count,union_pages,pages_total,density,"
                        "kv_elements_loaded,max_abs_err,mse,rel_fro_err");

        char* text = nullptr;
        REQUIRE(losa_report_render(rep, LOSA_FORMAT_JSON, &text) == LOSA_OK);
        CHECK(std::string(text).find("\"schema_version\": 1") != std::string::npos);
        losa_string_free(text);
        losa_report_free(rep);
    }
    SUBCASE("locality stats report") {
        losa_report* rep = nullptr;
        REQUIRE(losa_locality_stats(w, 0.5, LOSA_SIGNAL_Q, &rep) == LOSA_OK);
        char* text = nullptr;
        REQUIRE(losa_report_render(rep, LOSA_FORMAT_CSV, &text) == LOSA_OK);
        CHECK(std::string(text).find("step,rank,token,delta,cum_fraction,selected,tau_count") == 0);
        losa_string_free(text);
        // run summaries are not defined for locality reports
        losa_run_summary s{};
        CHECK(losa_report_get_summary(rep, &s) == LOSA_ERR_INVALID_ARG);
        losa_report_free(rep);
    }

    losa_workload_free(w);
}

TEST_CASE("error reporting through the C API") {
    SUBCASE("null arguments") {
        CHECK(losa_workload_generate(nullptr, nullptr) == LOSA_ERR_INVALID_ARG);
        CHECK(losa_workload_load(nullptr, nullptr) == LOSA_ERR_INVALID_ARG);
        CHECK(losa_report_write(nullptr, LOSA_FORMAT_CSV, "x") == LOSA_ERR_INVALID_ARG);
    }
    SUBCASE("missing trace file maps to an io error with a message") {
        losa_workload* w = nullptr;
        CHECK(losa_workload_load("/nonexistent/trace.bin", &w) == LOSA_ERR_IO);
        CHECK(std::strlen(losa_last_error()) > 0);
    }
    SUBCASE("corrupt trace maps to a format error") {
        TempFile file("losa_capi_corrupt.trace");
        std::ofstream os(file.str(), std::ios::binary);
        os << "this is not a trace";
        os.close();
        losa_workload* w = nullptr;
        CHECK(losa_workload_load(file.str().c_str(), &w) == LOSA_ERR_FORMAT);
        CHECK(std::string(losa_last_error()).find("magic") != std::string::npos);
    }
    SUBCASE("invalid generator config maps to a config error") {
        losa_gen_config cfg = small_gen();
        cfg.active_fraction = 2.0;
        losa_workload* w = nullptr;
        CHECK(losa_workload_generate(&cfg, &w) == LOSA_ERR_CONFIG);
    }
    SUBCASE("invalid engine config maps to a config error") {
        const losa_gen_config gen = small_gen();
        losa_workload* w = nullptr;
        REQUIRE(losa_workload_generate(&gen, &w) == LOSA_OK);
        losa_engine_config cfg{};
        losa_engine_config_default(&cfg);
        cfg.budget = 0;
        losa_report* rep = nullptr;
        CHECK(losa_run(w, &cfg, LOSA_METHOD_LOSA, 0, &rep) == LOSA_ERR_CONFIG);
        losa_workload_free(w);
    }
    SUBCASE("status names are stable") {
        CHECK(std::string(losa_status_name(LOSA_OK)) == "ok");
        CHECK(std::string(losa_status_name(LOSA_ERR_FORMAT)) == "format_error");
        CHECK(std::string(losa_status_name(LOSA_ERR_INVARIANT)) == "invariant_violation");
    }
    SUBCASE("abi version") {
        CHECK(losa_abi_version() == 1);
    }
}
