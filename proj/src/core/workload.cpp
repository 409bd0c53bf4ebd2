// SPDX-License-Identifier: Apache-2.0
#include "core/workload.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "core/rng.hpp"

namespace losa {

namespace {

constexpr char kMagic[4] = {'L', 'B', 'T', 'R'};
constexpr uint32_t kVersion = 1;

// element-count guard: keeps every byte-size computation inside uint64
constexpr uint64_t kMaxElements = uint64_t(1) << 40;

std::string format_source(const GenConfig& c) {
    std::ostringstream os;
    os << "gen:seed=" << c.seed << ",H=" << c.heads << ",d=" << c.head_dim
       << ",L=" << c.prefix_len << ",B=" << c.block_size << ",S=" << c.steps
       << ",af=" << c.active_fraction << ",sigma=" << c.perturb_scale
       << ",base=" << c.base_scale
       << ",pattern=" << (c.pattern == PerturbPattern::Window ? "window" : "uniform");
    return os.str();
}

void fill_normal(Matrix& m, Rng& rng, double scale) {
    for (float& v : m.data())
        v = float(scale * rng.next_normal());
}

// Rows perturbed at step t (t >= 1). Window mode advances a wrapping
// contiguous window of width m by m positions per step; uniform mode draws m
// distinct rows and applies them in ascending order.
std::vector<uint32_t> perturbed_row_set(const GenConfig& cfg, uint32_t step, Rng& rng) {
    const uint32_t m = cfg.perturbed_rows();
    const uint32_t B = cfg.block_size;
    std::vector<uint32_t> rows;
    rows.reserve(m);
    if (m == 0) return rows;
    if (cfg.pattern == PerturbPattern::Window) {
        const uint32_t start = uint32_t((uint64_t(step) - 1) * m % B);
        for (uint32_t j = 0; j < m; ++j)
            rows.push_back((start + j) % B);
    } else {
        std::vector<uint32_t> pool(B);
        for (uint32_t i = 0; i < B; ++i) pool[i] = i;
        for (uint32_t j = 0; j < m; ++j) {
            const uint64_t pick = j + rng.next_below(B - j);
            std::swap(pool[j], pool[size_t(pick)]);
        }
        rows.assign(pool.begin(), pool.begin() + m);
        std::sort(rows.begin(), rows.end());
    }
    return rows;
}

void perturb_rows(Matrix& m, const std::vector<uint32_t>& rows, Rng& rng, double sigma) {
    for (uint32_t r : rows) {
        auto row = m.row(r);
        for (float& v : row)
            v = float(double(v) + sigma * rng.next_normal());
    }
}

} // namespace

uint32_t GenConfig::perturbed_rows() const {
    return uint32_t(std::llround(active_fraction * double(block_size)));
}

void GenConfig::validate() const {
    require(heads >= 1, ErrorCode::Config, "heads must be >= 1");
    require(head_dim >= 1, ErrorCode::Config, "head_dim must be >= 1");
    require(prefix_len >= 1, ErrorCode::Config, "prefix_len must be >= 1");
    require(block_size >= 1, ErrorCode::Config, "block_size must be >= 1");
    require(steps >= 1, ErrorCode::Config, "steps must be >= 1");
    require(std::isfinite(active_fraction) && active_fraction >= 0.0 && active_fraction <= 1.0,
            ErrorCode::Config, "active_fraction must be in [0, 1]");
    require(std::isfinite(perturb_scale) && perturb_scale > 0.0, ErrorCode::Config,
            "perturb_scale must be > 0");
    require(std::isfinite(base_scale) && base_scale > 0.0, ErrorCode::Config,
            "base_scale must be > 0");
}

DenoiseWorkload gen_synthetic(const GenConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);

    DenoiseWorkload w;
    w.heads = cfg.heads;
    w.head_dim = cfg.head_dim;
    w.prefix_len = cfg.prefix_len;
    w.block_size = cfg.block_size;
    w.source = format_source(cfg);

    // Draw order matches the trace layout: prefix keys for all heads, prefix
    // values for all heads, then per step Q, K, V (all heads each).
    w.prefix_keys.reserve(cfg.heads);
    w.prefix_values.reserve(cfg.heads);
    for (uint32_t h = 0; h < cfg.heads; ++h) {
        Matrix m(cfg.prefix_len, cfg.head_dim);
        fill_normal(m, rng, cfg.base_scale);
        w.prefix_keys.push_back(std::move(m));
    }
    for (uint32_t h = 0; h < cfg.heads; ++h) {
        Matrix m(cfg.prefix_len, cfg.head_dim);
        fill_normal(m, rng, cfg.base_scale);
        w.prefix_values.push_back(std::move(m));
    }

    StepTensors first;
    for (auto* tensor : {&first.queries, &first.keys, &first.values}) {
        tensor->reserve(cfg.heads);
        for (uint32_t h = 0; h < cfg.heads; ++h) {
            Matrix m(cfg.block_size, cfg.head_dim);
            fill_normal(m, rng, cfg.base_scale);
            tensor->push_back(std::move(m));
        }
    }
    w.steps.push_back(std::move(first));

    for (uint32_t t = 1; t < cfg.steps; ++t) {
        StepTensors st = w.steps.back(); // copy of the previous step
        const auto rows = perturbed_row_set(cfg, t, rng);
        for (auto* tensor : {&st.queries, &st.keys, &st.values})
            for (Matrix& m : *tensor)
                perturb_rows(m, rows, rng, cfg.perturb_scale);
        w.steps.push_back(std::move(st));
    }
    return w;
}

namespace {

uint64_t checked_mul(uint64_t a, uint64_t b) {
    require(b == 0 || a <= kMaxElements / b, ErrorCode::Format, "shape overflow in trace header");
    return a * b;
}

void write_u32(std::ostream& os, uint32_t v) {
    const unsigned char b[4] = {
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff),
    };
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_f32_block(std::ostream& os, std::span<const float> data) {
    std::vector<unsigned char> buf(data.size() * 4);
    for (size_t i = 0; i < data.size(); ++i) {
        const uint32_t bits = std::bit_cast<uint32_t>(data[i]);
        buf[4 * i + 0] = static_cast<unsigned char>(bits & 0xff);
        buf[4 * i + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
        buf[4 * i + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
        buf[4 * i + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
    }
    os.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
}

class TraceReader {
public:
    TraceReader(const std::string& path) : path_(path), is_(path, std::ios::binary) {
        require(is_.good(), ErrorCode::Io, "cannot open trace file");
    }

    void read_exact(void* dst, size_t n, const char* section) {
        is_.read(static_cast<char*>(dst), std::streamsize(n));
        if (size_t(is_.gcount()) != n) {
            std::ostringstream os;
            os << "truncated trace: " << section << " incomplete at byte "
               << (offset_ + size_t(is_.gcount())) << " in " << path_;
            raise(ErrorCode::Format, os.str());
        }
        offset_ += n;
    }

    uint32_t read_u32(const char* section) {
        unsigned char b[4];
        read_exact(b, 4, section);
        return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
               (uint32_t(b[3]) << 24);
    }

    Matrix read_matrix(size_t rows, size_t cols, const std::string& section) {
        std::vector<unsigned char> buf(rows * cols * 4);
        read_exact(buf.data(), buf.size(), section.c_str());
        std::vector<float> data(rows * cols);
        for (size_t i = 0; i < data.size(); ++i) {
            const uint32_t bits = uint32_t(buf[4 * i]) | (uint32_t(buf[4 * i + 1]) << 8) |
                                  (uint32_t(buf[4 * i + 2]) << 16) |
                                  (uint32_t(buf[4 * i + 3]) << 24);
            data[i] = std::bit_cast<float>(bits);
        }
        Matrix m(rows, cols, std::move(data));
        if (!m.all_finite()) {
            std::ostringstream os;
            os << "non-finite value in " << section << " (section ends at byte " << offset_
               << ") in " << path_;
            raise(ErrorCode::Format, os.str());
        }
        return m;
    }

    void expect_eof() {
        char extra;
        is_.read(&extra, 1);
        if (is_.gcount() != 0) {
            std::ostringstream os;
            os << "unexpected trailing bytes at byte " << offset_ << " in " << path_;
            raise(ErrorCode::Format, os.str());
        }
    }

private:
    std::string path_;
    std::ifstream is_;
    uint64_t offset_ = 0;
};

} // namespace

void save_trace(const DenoiseWorkload& w, const std::string& path) {
    require(w.heads >= 1 && w.head_dim >= 1 && w.prefix_len >= 1 && w.block_size >= 1,
            ErrorCode::InvalidArgument, "workload dimensions incomplete");
    require(w.step_count() >= 1, ErrorCode::InvalidArgument, "cannot save an empty workload");

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    require(os.good(), ErrorCode::Io, "cannot open trace file for writing");

    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_u32(os, w.heads);
    write_u32(os, w.head_dim);
    write_u32(os, w.prefix_len);
    write_u32(os, w.block_size);
    write_u32(os, w.step_count());

    for (const Matrix& m : w.prefix_keys) write_f32_block(os, m.data());
    for (const Matrix& m : w.prefix_values) write_f32_block(os, m.data());
    for (const StepTensors& st : w.steps) {
        for (const Matrix& m : st.queries) write_f32_block(os, m.data());
        for (const Matrix& m : st.keys) write_f32_block(os, m.data());
        for (const Matrix& m : st.values) write_f32_block(os, m.data());
    }
    os.flush();
    require(os.good(), ErrorCode::Io, "write failure while saving trace");
}

DenoiseWorkload load_trace(const std::string& path) {
    TraceReader rd(path);

    char magic[4];
    rd.read_exact(magic, 4, "magic");
    require(std::memcmp(magic, kMagic, 4) == 0, ErrorCode::Format, "bad magic: not a trace file");
    const uint32_t version = rd.read_u32("version");
    if (version != kVersion) {
        std::ostringstream os;
        os << "unsupported trace version " << version;
        raise(ErrorCode::Format, os.str());
    }

    DenoiseWorkload w;
    w.heads = rd.read_u32("header");
    w.head_dim = rd.read_u32("header");
    w.prefix_len = rd.read_u32("header");
    w.block_size = rd.read_u32("header");
    const uint32_t steps = rd.read_u32("header");
    require(steps >= 1, ErrorCode::Format, "empty workload (S=0)");
    require(w.heads >= 1 && w.head_dim >= 1 && w.prefix_len >= 1 && w.block_size >= 1,
            ErrorCode::Format, "invalid zero field in trace header");

    // byte-size sanity before any allocation
    const uint64_t prefix_elems = checked_mul(checked_mul(w.heads, w.prefix_len), w.head_dim);
    const uint64_t step_elems = checked_mul(checked_mul(w.heads, w.block_size), w.head_dim);
    const uint64_t total =
        checked_mul(prefix_elems, 2) + checked_mul(checked_mul(step_elems, 3), steps);
    require(total <= kMaxElements, ErrorCode::Format, "shape overflow in trace header");

    for (uint32_t h = 0; h < w.heads; ++h)
        w.prefix_keys.push_back(rd.read_matrix(w.prefix_len, w.head_dim, "prefix keys"));
    for (uint32_t h = 0; h < w.heads; ++h)
        w.prefix_values.push_back(rd.read_matrix(w.prefix_len, w.head_dim, "prefix values"));

    for (uint32_t t = 0; t < steps; ++t) {
        StepTensors st;
        const std::string tag = "step " + std::to_string(t);
        for (uint32_t h = 0; h < w.heads; ++h)
            st.queries.push_back(rd.read_matrix(w.block_size, w.head_dim, tag + " queries"));
        for (uint32_t h = 0; h < w.heads; ++h)
            st.keys.push_back(rd.read_matrix(w.block_size, w.head_dim, tag + " keys"));
        for (uint32_t h = 0; h < w.heads; ++h)
            st.values.push_back(rd.read_matrix(w.block_size, w.head_dim, tag + " values"));
        w.steps.push_back(std::move(st));
    }
    rd.expect_eof();
    w.source = "trace:" + path;
    return w;
}

bool bitwise_equal(const DenoiseWorkload& a, const DenoiseWorkload& b) {
    if (a.heads != b.heads || a.head_dim != b.head_dim || a.prefix_len != b.prefix_len ||
        a.block_size != b.block_size || a.step_count() != b.step_count())
        return false;
    for (uint32_t h = 0; h < a.heads; ++h)
        if (!bitwise_equal(a.prefix_keys[h], b.prefix_keys[h]) ||
            !bitwise_equal(a.prefix_values[h], b.prefix_values[h]))
            return false;
    for (uint32_t t = 0; t < a.step_count(); ++t)
        for (uint32_t h = 0; h < a.heads; ++h)
            if (!bitwise_equal(a.steps[t].queries[h], b.steps[t].queries[h]) ||
                !bitwise_equal(a.steps[t].keys[h], b.steps[t].keys[h]) ||
                !bitwise_equal(a.steps[t].values[h], b.steps[t].values[h]))
                return false;
    return true;
}

} // namespace losa
