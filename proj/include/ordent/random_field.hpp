#pragma once

#include <cstdint>
#include <vector>

#include "ordent/matrix.hpp"
#include "ordent/rng.hpp"

namespace ordent {

// Ordered sample locations in [0, 1].
struct Grid {
    std::vector<double> points;

    int count() const noexcept { return static_cast<int>(points.size()); }

    // count equally spaced points covering [0, 1], endpoints included.
    static Grid uniform(int count);

    // Validates: strictly increasing, finite, inside [0, 1], count >= 2.
    static Grid from_points(std::vector<double> pts);

    friend bool operator==(const Grid&, const Grid&) = default;
};

// Sorted union of two grids; coincident points collapse to one.
Grid merge_grids(const Grid& a, const Grid& b);

// RBF covariance parameters: variance * exp(-(x-x')^2 / (2 l^2)).
struct KernelConfig {
    double length_scale = 0.2;
    double variance = 1.0;
    double jitter = 0.0;

    void validate() const;
};

// One realization of a random function, stored as nodal values on a grid.
struct FieldSample {
    Grid grid;
    std::vector<double> values;

    friend bool operator==(const FieldSample&, const FieldSample&) = default;
};

// Covariance matrix of the RBF kernel on the grid, plus jitter on the
// diagonal. Symmetric by construction.
Matrix rbf_kernel_matrix(const Grid& grid, const KernelConfig& cfg);

// Lower-triangular L with L L^T = K. K must be symmetric. If the plain
// factorization breaks down, a diagonal shift starting at 1e-10 escalates
// by x10 up to 1e-6 before a numerical_error is thrown; dense RBF matrices
// are numerically rank-deficient, so the small shift is routinely needed.
Matrix factor_covariance(const Matrix& K);

// Draws L * xi with xi iid standard normal. Deterministic per seed.
FieldSample sample_grf(const Grid& grid, const Matrix& factor, std::uint64_t seed);
FieldSample sample_grf(const Grid& grid, const Matrix& factor, Rng& rng);

} // namespace ordent
