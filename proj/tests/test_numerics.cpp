// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "core/numerics.hpp"
#include "support/reference.hpp"

using losa::Matrix;

TEST_CASE("matmul_transposed basics") {
    SUBCASE("orthogonal vectors") {
        const Matrix a = Matrix::from_rows({{1, 0}});
        const Matrix b = Matrix::from_rows({{0, 1}});
        const Matrix out = losa::matmul_transposed(a, b);
        CHECK(out.rows() == 1);
        CHECK(out.cols() == 1);
        CHECK(out(0, 0) == 0.0f);
    }
    SUBCASE("identity") {
        const Matrix eye = Matrix::from_rows({{1, 0}, {0, 1}});
        const Matrix out = losa::matmul_transposed(eye, eye);
        CHECK(out(0, 0) == 1.0f);
        CHECK(out(0, 1) == 0.0f);
        CHECK(out(1, 0) == 0.0f);
        CHECK(out(1, 1) == 1.0f);
    }
    SUBCASE("hand-expanded dot products") {
        const Matrix a = Matrix::from_rows({{1, 2}});
        const Matrix b = Matrix::from_rows({{3, 4}, {5, 6}});
        const Matrix out = losa::matmul_transposed(a, b);
        CHECK(out(0, 0) == 11.0f);
        CHECK(out(0, 1) == 17.0f);
    }
    SUBCASE("dimension mismatch") {
        const Matrix a(1, 3);
        const Matrix b(2, 2);
        CHECK_THROWS_AS((void)losa::matmul_transposed(a, b), losa::Error);
    }
}

TEST_CASE("softmax_row examples") {
    SUBCASE("symmetry") {
        const float s[] = {0.0f, 0.0f};
        const auto p = losa::softmax_row(s);
        CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-7));
        CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-7));
    }
    SUBCASE("single element") {
        for (float c : {-37.0f, 0.0f, 5.25f, 64.0f}) {
            const float s[] = {c};
            const auto p = losa::softmax_row(s);
            CHECK(p[0] == 1.0f);
        }
    }
    SUBCASE("direct evaluation of [0, ln 3]") {
        const float s[] = {0.0f, float(std::log(3.0))};
        const auto p = losa::softmax_row(s);
        CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-6));
        CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-6));
    }
    SUBCASE("empty input") {
        CHECK_THROWS_AS((void)losa::softmax_row({}), losa::Error);
    }
}

TEST_CASE("softmax_row properties") {
    std::mt19937 rng(42);
    // Scores and shifts on a 1/256 grid so that the float32 additions below
    // are exact and the check exercises the algorithm, not input rounding.
    std::uniform_int_distribution<int> grid(-80 * 256, 80 * 256);
    std::uniform_int_distribution<int> len(1, 64);
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<float> s(size_t(len(rng)));
        for (float& v : s) v = float(grid(rng)) / 256.0f;

        const auto p = losa::softmax_row(s);
        double sum = 0.0;
        for (float v : p) {
            CHECK(v >= 0.0f);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));

        const float shift = float(grid(rng) / 10) / 256.0f;
        std::vector<float> shifted = s;
        for (float& v : shifted) v += shift;
        const auto q = losa::softmax_row(shifted);
        for (size_t i = 0; i < p.size(); ++i)
            CHECK(double(q[i]) == doctest::Approx(double(p[i])).epsilon(1e-6));
    }
}

TEST_CASE("logsumexp_row") {
    SUBCASE("single element is exact") {
        for (float c : {-12.5f, 0.0f, 3.0f, 77.0f}) {
            const float s[] = {c};
            CHECK(losa::logsumexp_row(s) == double(c));
        }
    }
    SUBCASE("two equal scores") {
        const float s[] = {0.0f, 0.0f};
        CHECK(losa::logsumexp_row(s) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("direct evaluation of [1,2,3]") {
        const float s[] = {1.0f, 2.0f, 3.0f};
        const double want = 3.0 + std::log(std::exp(-2.0) + std::exp(-1.0) + 1.0);
        CHECK(losa::logsumexp_row(s) == doctest::Approx(want).epsilon(1e-12));
    }
    SUBCASE("empty input is -inf") {
        CHECK(losa::logsumexp_row({}) == -std::numeric_limits<double>::infinity());
    }
    SUBCASE("shift property") {
        std::mt19937 rng(7);
        std::uniform_real_distribution<double> mag(-40.0, 40.0);
        for (int iter = 0; iter < 100; ++iter) {
            std::vector<float> s(8);
            for (float& v : s) v = float(mag(rng));
            const double c = mag(rng);
            std::vector<float> shifted = s;
            for (float& v : shifted) v += float(c);
            CHECK(losa::logsumexp_row(shifted) ==
                  doctest::Approx(losa::logsumexp_row(s) + double(float(c))).epsilon(1e-5));
        }
    }
}
