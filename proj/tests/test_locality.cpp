// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "core/locality.hpp"
#include "support/reference.hpp"

using losa::ActiveSet;
using losa::LocalityScores;
using losa::Matrix;

TEST_CASE("locality_scores") {
    SUBCASE("identical representations score zero") {
        std::mt19937 rng(21);
        const Matrix x = ref::random_matrix(rng, 6, 10);
        const LocalityScores s = losa::locality_scores(x, x);
        for (double d : s.delta) CHECK(d == 0.0);
    }
    SUBCASE("constant offset squares") {
        Matrix cur(1, 8), prev(1, 8);
        for (size_t j = 0; j < 8; ++j) cur(0, j) = 1.5f;
        const LocalityScores s = losa::locality_scores(cur, prev);
        CHECK(s.delta[0] == doctest::Approx(2.25).epsilon(1e-12));
    }
    SUBCASE("direct evaluation") {
        const Matrix prev = Matrix::from_rows({{1, 1}, {1, 1}});
        const Matrix cur = Matrix::from_rows({{1, 1}, {3, 1}});
        const LocalityScores s = losa::locality_scores(cur, prev);
        CHECK(s.delta[0] == 0.0);
        CHECK(s.delta[1] == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS((void)losa::locality_scores(Matrix(2, 3), Matrix(2, 4)), losa::Error);
    }
    SUBCASE("scale equivariance") {
        std::mt19937 rng(22);
        const Matrix cur = ref::random_matrix(rng, 5, 12);
        const Matrix prev = ref::random_matrix(rng, 5, 12);
        Matrix cur2 = cur, prev2 = prev;
        for (float& v : cur2.data()) v *= 3.0f;
        for (float& v : prev2.data()) v *= 3.0f;
        const LocalityScores a = losa::locality_scores(cur, prev);
        const LocalityScores b = losa::locality_scores(cur2, prev2);
        for (size_t i = 0; i < a.delta.size(); ++i)
            CHECK(b.delta[i] == doctest::Approx(9.0 * a.delta[i]).epsilon(1e-6));
    }
}

TEST_CASE("select_active_topk") {
    SUBCASE("k covering the block selects everything") {
        const LocalityScores s{{0.5, 0.1, 0.9}};
        const ActiveSet a = losa::select_active_topk(s, 10);
        CHECK(a.indices == std::vector<uint32_t>{0, 1, 2});
    }
    SUBCASE("ties keep the smaller token index") {
        const LocalityScores s{{0.1, 9.0, 3.0, 9.0}};
        const ActiveSet a = losa::select_active_topk(s, 2);
        CHECK(a.indices == std::vector<uint32_t>{1, 3});
    }
    SUBCASE("top-5 of a 16-token block") {
        std::mt19937 rng(23);
        LocalityScores s;
        s.delta.resize(16);
        for (double& d : s.delta) d = std::uniform_real_distribution<double>(0, 1)(rng);
        const ActiveSet a = losa::select_active_topk(s, 5);
        CHECK(a.indices.size() == 5);
    }
    SUBCASE("all-zero scores still select by tie rule") {
        const LocalityScores s{{0, 0, 0, 0}};
        const ActiveSet a = losa::select_active_topk(s, 2);
        CHECK(a.indices == std::vector<uint32_t>{0, 1});
    }
    SUBCASE("invariant under strictly monotone transforms") {
        std::mt19937 rng(24);
        for (int iter = 0; iter < 30; ++iter) {
            LocalityScores s;
            s.delta.resize(12);
            for (double& d : s.delta) d = std::uniform_real_distribution<double>(0, 4)(rng);
            LocalityScores doubled{s.delta}, squared{s.delta};
            for (double& d : doubled.delta) d *= 2.0;
            for (double& d : squared.delta) d = d * d;
            const auto base = losa::select_active_topk(s, 4).indices;
            CHECK(losa::select_active_topk(doubled, 4).indices == base);
            CHECK(losa::select_active_topk(squared, 4).indices == base);
        }
    }
    SUBCASE("zero k_active is a config error") {
        CHECK_THROWS_AS((void)losa::select_active_topk(LocalityScores{{1.0}}, 0), losa::Error);
    }
}

TEST_CASE("select_active_threshold") {
    SUBCASE("point mass selects the single token") {
        const LocalityScores s{{0, 0, 7.5, 0}};
        for (double tau : {0.1, 0.5, 1.0}) {
            const ActiveSet a = losa::select_active_threshold(s, tau);
            CHECK(a.indices == std::vector<uint32_t>{2});
        }
    }
    SUBCASE("cumulative sum by hand") {
        const LocalityScores s{{4, 3, 2, 1}};
        const ActiveSet a = losa::select_active_threshold(s, 0.5);
        CHECK(a.indices == std::vector<uint32_t>{0, 1}); // 4+3=7 >= 5
    }
    SUBCASE("uniform mass selects half at tau=0.5") {
        LocalityScores s;
        s.delta.assign(16, 1.0);
        const ActiveSet a = losa::select_active_threshold(s, 0.5);
        CHECK(a.indices.size() == 8);
    }
    SUBCASE("all-zero scores fall back to one token") {
        const LocalityScores s{{0, 0, 0}};
        const ActiveSet a = losa::select_active_threshold(s, 0.5);
        CHECK(a.indices == std::vector<uint32_t>{0});
    }
    SUBCASE("tau=1 selects every token with positive delta") {
        std::mt19937 rng(25);
        for (int iter = 0; iter < 30; ++iter) {
            LocalityScores s;
            s.delta.resize(10);
            size_t positives = 0;
            for (double& d : s.delta) {
                d = rng() % 2 ? std::uniform_real_distribution<double>(0.01, 2)(rng) : 0.0;
                positives += d > 0.0;
            }
            if (positives == 0) continue;
            const ActiveSet a = losa::select_active_threshold(s, 1.0);
            CHECK(a.indices.size() == positives);
        }
    }
    SUBCASE("tau outside (0,1] is a config error") {
        CHECK_THROWS_AS((void)losa::select_active_threshold(LocalityScores{{1.0}}, 0.0),
                        losa::Error);
        CHECK_THROWS_AS((void)losa::select_active_threshold(LocalityScores{{1.0}}, 1.5),
                        losa::Error);
    }
}
