#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ordent/errors.hpp"
#include "ordent/random_field.hpp"
#include "testutil.hpp"

using namespace ordent;

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(Grid::from_points({0.5}), invalid_input_error);
    CHECK_THROWS_AS(Grid::from_points({0.2, 0.2}), invalid_input_error);
    CHECK_THROWS_AS(Grid::from_points({-0.1, 0.5}), invalid_input_error);
    CHECK_THROWS_AS(Grid::from_points({0.1, 1.5}), invalid_input_error);
    const Grid g = Grid::uniform(5);
    CHECK(g.count() == 5);
    CHECK(g.points.front() == 0.0);
    CHECK(g.points.back() == 1.0);
}

TEST_CASE("merge_grids removes duplicates and stays sorted") {
    const Grid a = Grid::uniform(3);                       // 0, 0.5, 1
    const Grid b = Grid::from_points({0.25, 0.5, 0.75});
    const Grid u = merge_grids(a, b);
    CHECK(u.points == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
}

TEST_CASE("rbf kernel closed form") {
    const double l = 0.2;
    const Grid g = Grid::from_points({0.0, l, 0.9});
    const Matrix k = rbf_kernel_matrix(g, KernelConfig{l, 1.0, 0.0});
    CHECK(k(0, 0) == 1.0);                          // zero distance
    CHECK(k(1, 1) == 1.0);
    CHECK(k(0, 1) == doctest::Approx(0.6065306597126334).epsilon(1e-15));  // exp(-1/2)
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(k(i, j) == k(j, i));
}

TEST_CASE("rbf kernel symmetry on random grids") {
    Rng rng(99);
    for (int t = 0; t < 10; ++t) {
        std::vector<double> pts;
        double x = rng.uniform() * 0.05;
        while (x < 1.0) {
            pts.push_back(x);
            x += 0.02 + rng.uniform() * 0.1;
        }
        if (pts.size() < 2) continue;
        const Grid g = Grid::from_points(pts);
        const Matrix k = rbf_kernel_matrix(g, KernelConfig{0.1 + rng.uniform(), 0.5 + rng.uniform(), 0.0});
        for (int i = 0; i < g.count(); ++i)
            for (int j = 0; j < g.count(); ++j) CHECK(k(i, j) == k(j, i));
    }
}

TEST_CASE("kernel diagonal is variance plus jitter") {
    const Grid g = Grid::uniform(4);
    const Matrix k = rbf_kernel_matrix(g, KernelConfig{0.3, 2.5, 1e-6});
    for (int i = 0; i < 4; ++i) CHECK(k(i, i) == doctest::Approx(2.5 + 1e-6).epsilon(1e-15));
}

TEST_CASE("factor_covariance identity") {
    Matrix eye(3, 3);
    for (int i = 0; i < 3; ++i) eye(i, i) = 1.0;
    const Matrix l = factor_covariance(eye);
    CHECK(l == eye);
}

TEST_CASE("factor_covariance 2x2 known factor") {
    Matrix k(2, 2);
    k(0, 0) = 4.0; k(0, 1) = 2.0;
    k(1, 0) = 2.0; k(1, 1) = 3.0;
    const Matrix l = factor_covariance(k);
    CHECK(l(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(l(0, 1) == 0.0);
    CHECK(l(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(l(1, 1) == doctest::Approx(1.4142135623730951).epsilon(1e-15));
    // multiply-back oracle
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double s = 0.0;
            for (int t = 0; t < 2; ++t) s += l(i, t) * l(j, t);
            CHECK(s == doctest::Approx(k(i, j)).epsilon(1e-14));
        }
}

TEST_CASE("factor_covariance reconstructs the dense RBF matrix") {
    const Grid g = Grid::uniform(100);
    const Matrix k = rbf_kernel_matrix(g, KernelConfig{0.2, 1.0, 0.0});
    const Matrix l = factor_covariance(k);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j) {
            double s = 0.0;
            for (int t = 0; t <= std::min(i, j); ++t) s += l(i, t) * l(j, t);
            worst = std::max(worst, std::abs(s - k(i, j)));
        }
    CHECK(worst < 1e-8);
}

TEST_CASE("factor_covariance rejects asymmetry") {
    Matrix k(2, 2);
    k(0, 0) = 1.0; k(0, 1) = 0.5;
    k(1, 0) = 0.4; k(1, 1) = 1.0;
    CHECK_THROWS_AS(factor_covariance(k), invalid_input_error);
}

TEST_CASE("sample_grf determinism and seed sensitivity") {
    const Grid g = Grid::uniform(32);
    const Matrix l = factor_covariance(rbf_kernel_matrix(g, KernelConfig{0.2, 1.0, 0.0}));
    const FieldSample a = sample_grf(g, l, 42);
    const FieldSample b = sample_grf(g, l, 42);
    const FieldSample c = sample_grf(g, l, 43);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
}

TEST_CASE("sample_grf matches its covariance in Monte Carlo") {
    const Grid g = Grid::uniform(8);
    const Matrix k = rbf_kernel_matrix(g, KernelConfig{0.2, 1.0, 0.0});
    const Matrix l = factor_covariance(k);
    const int draws = 10000;
    std::vector<double> mean(8, 0.0);
    Matrix cov(8, 8);
    for (int t = 0; t < draws; ++t) {
        const FieldSample f = sample_grf(g, l, 1000 + static_cast<std::uint64_t>(t));
        for (int i = 0; i < 8; ++i) {
            mean[i] += f.values[i];
            for (int j = 0; j < 8; ++j) cov(i, j) += f.values[i] * f.values[j];
        }
    }
    for (int i = 0; i < 8; ++i) {
        mean[i] /= draws;
        // 5 sigma / sqrt(draws) with unit marginal variance
        CHECK(std::abs(mean[i]) < 5.0 / std::sqrt(static_cast<double>(draws)));
    }
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) CHECK(std::abs(cov(i, j) / draws - k(i, j)) < 0.1);
}
