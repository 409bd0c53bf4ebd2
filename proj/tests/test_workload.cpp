// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "core/workload.hpp"

using losa::DenoiseWorkload;
using losa::GenConfig;
using losa::Matrix;

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

GenConfig small_config() {
    GenConfig cfg;
    cfg.heads = 2;
    cfg.head_dim = 8;
    cfg.prefix_len = 32;
    cfg.block_size = 16;
    cfg.steps = 5;
    cfg.active_fraction = 0.25;
    cfg.perturb_scale = 0.2;
    cfg.base_scale = 1.0;
    cfg.seed = 99;
    return cfg;
}

size_t rows_changed(const Matrix& a, const Matrix& b) {
    size_t n = 0;
    for (size_t i = 0; i < a.rows(); ++i) {
        bool differs = false;
        for (size_t j = 0; j < a.cols(); ++j)
            if (a(i, j) != b(i, j)) differs = true;
        n += differs;
    }
    return n;
}

} // namespace

TEST_CASE("generator determinism") {
    const GenConfig cfg = small_config();
    const DenoiseWorkload a = losa::gen_synthetic(cfg);
    const DenoiseWorkload b = losa::gen_synthetic(cfg);
    CHECK(losa::bitwise_equal(a, b));

    GenConfig other = cfg;
    other.seed += 1;
    CHECK_FALSE(losa::bitwise_equal(a, losa::gen_synthetic(other)));
}

TEST_CASE("zero active fraction keeps every step identical") {
    GenConfig cfg = small_config();
    cfg.active_fraction = 0.0;
    const DenoiseWorkload w = losa::gen_synthetic(cfg);
    for (uint32_t t = 1; t < w.step_count(); ++t)
        for (uint32_t h = 0; h < w.heads; ++h) {
            CHECK(losa::bitwise_equal(w.steps[t].queries[h], w.steps[0].queries[h]));
            CHECK(losa::bitwise_equal(w.steps[t].keys[h], w.steps[0].keys[h]));
            CHECK(losa::bitwise_equal(w.steps[t].values[h], w.steps[0].values[h]));
        }
}

TEST_CASE("perturbed row count matches round(active_fraction * B)") {
    SUBCASE("window pattern, quarter of a 16-token block") {
        const GenConfig cfg = small_config(); // af=0.25, B=16 -> 4 rows
        const DenoiseWorkload w = losa::gen_synthetic(cfg);
        for (uint32_t t = 1; t < w.step_count(); ++t)
            for (uint32_t h = 0; h < w.heads; ++h)
                CHECK(rows_changed(w.steps[t].queries[h], w.steps[t - 1].queries[h]) == 4);
    }
    SUBCASE("window rows advance contiguously and wrap") {
        const GenConfig cfg = small_config();
        const DenoiseWorkload w = losa::gen_synthetic(cfg);
        const uint32_t m = cfg.perturbed_rows();
        for (uint32_t t = 1; t < w.step_count(); ++t) {
            const uint32_t start = uint32_t((uint64_t(t) - 1) * m % cfg.block_size);
            for (uint32_t i = 0; i < cfg.block_size; ++i) {
                bool expected = false;
                for (uint32_t j = 0; j < m; ++j)
                    if ((start + j) % cfg.block_size == i) expected = true;
                bool differs = false;
                for (size_t c = 0; c < cfg.head_dim; ++c)
                    if (w.steps[t].queries[0](i, c) != w.steps[t - 1].queries[0](i, c))
                        differs = true;
                CHECK(differs == expected);
            }
        }
    }
    SUBCASE("uniform pattern perturbs m distinct rows") {
        GenConfig cfg = small_config();
        cfg.pattern = losa::PerturbPattern::UniformRows;
        cfg.active_fraction = 0.5;
        const DenoiseWorkload w = losa::gen_synthetic(cfg);
        for (uint32_t t = 1; t < w.step_count(); ++t)
            CHECK(rows_changed(w.steps[t].queries[1], w.steps[t - 1].queries[1]) == 8);
    }
}

TEST_CASE("generator config validation") {
    GenConfig cfg = small_config();
    cfg.active_fraction = 1.5;
    CHECK_THROWS_AS((void)losa::gen_synthetic(cfg), losa::Error);
    cfg = small_config();
    cfg.perturb_scale = 0.0;
    CHECK_THROWS_AS((void)losa::gen_synthetic(cfg), losa::Error);
    cfg = small_config();
    cfg.steps = 0;
    CHECK_THROWS_AS((void)losa::gen_synthetic(cfg), losa::Error);
}

TEST_CASE("trace round-trip is bitwise") {
    const DenoiseWorkload w = losa::gen_synthetic(small_config());
    TempFile file("losa_test_roundtrip.trace");
    losa::save_trace(w, file.str());
    const DenoiseWorkload back = losa::load_trace(file.str());
    CHECK(losa::bitwise_equal(w, back));
}

TEST_CASE("trace format errors") {
    const DenoiseWorkload w = losa::gen_synthetic(small_config());
    TempFile file("losa_test_fmt.trace");
    losa::save_trace(w, file.str());

    SUBCASE("missing file") {
        CHECK_THROWS_AS((void)losa::load_trace("/nonexistent/losa.trace"), losa::Error);
    }
    SUBCASE("bad magic") {
        std::fstream f(file.str(), std::ios::in | std::ios::out | std::ios::binary);
        f.write("XXXX", 4);
        f.close();
        CHECK_THROWS_WITH_AS((void)losa::load_trace(file.str()),
                             doctest::Contains("bad magic"), losa::Error);
    }
    SUBCASE("unsupported version") {
        std::fstream f(file.str(), std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        const char v[4] = {9, 0, 0, 0};
        f.write(v, 4);
        f.close();
        CHECK_THROWS_WITH_AS((void)losa::load_trace(file.str()),
                             doctest::Contains("version"), losa::Error);
    }
    SUBCASE("truncated file names the missing section") {
        const auto size = std::filesystem::file_size(file.path);
        std::filesystem::resize_file(file.path, size / 2);
        CHECK_THROWS_WITH_AS((void)losa::load_trace(file.str()),
                             doctest::Contains("truncated"), losa::Error);
    }
    SUBCASE("header-only file with S=0") {
        std::ofstream f(file.str(), std::ios::binary | std::ios::trunc);
        f.write("LBTR", 4);
        const uint32_t words[6] = {1, 1, 1, 1, 1, 0}; // version, H, d, L, B, S=0
        f.write(reinterpret_cast<const char*>(words), sizeof(words));
        f.close();
        CHECK_THROWS_WITH_AS((void)losa::load_trace(file.str()),
                             doctest::Contains("empty workload"), losa::Error);
    }
    SUBCASE("trailing bytes are rejected") {
        std::ofstream f(file.str(), std::ios::binary | std::ios::app);
        f.write("zz", 2);
        f.close();
        CHECK_THROWS_WITH_AS((void)losa::load_trace(file.str()),
                             doctest::Contains("trailing"), losa::Error);
    }
    SUBCASE("absurd header dimensions are a shape overflow") {
        std::ofstream f(file.str(), std::ios::binary | std::ios::trunc);
        f.write("LBTR", 4);
        const unsigned char one[4] = {1, 0, 0, 0};
        f.write(reinterpret_cast<const char*>(one), 4); // version
        for (int i = 0; i < 5; ++i) {
            const unsigned char huge[4] = {0xff, 0xff, 0xff, 0xff};
            f.write(reinterpret_cast<const char*>(huge), 4);
        }
        f.close();
        CHECK_THROWS_WITH_AS((void)losa::load_trace(file.str()),
                             doctest::Contains("shape overflow"), losa::Error);
    }
    SUBCASE("non-finite tensor values are rejected") {
        std::fstream f(file.str(), std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(28); // first float of the prefix keys
        const unsigned char nan_bytes[4] = {0x00, 0x00, 0xC0, 0x7F};
        f.write(reinterpret_cast<const char*>(nan_bytes), 4);
        f.close();
        CHECK_THROWS_WITH_AS((void)losa::load_trace(file.str()),
                             doctest::Contains("non-finite"), losa::Error);
    }
}
