#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ordent/random_field.hpp"

namespace ordent {

// One regression example: an input function observed at m fixed sensor
// locations, a query point, and the operator's output value there.
struct OperatorSample {
    std::vector<double> sensors;
    double query = 0.0;
    double target = 0.0;

    friend bool operator==(const OperatorSample&, const OperatorSample&) = default;
};

enum class DatasetKind { linear, nonlinear };

struct DatasetMeta {
    DatasetKind kind = DatasetKind::linear;
    int n = 0;                  // function draws
    int m = 0;                  // sensors per sample
    int queries_per_function = 1;
    std::uint64_t seed = 0;
    double variance = 1.0;      // GRF variance sigma^2
    // linear operator only
    double length_scale = 0.2;
    int fine_grid_points = 1000;
    // nonlinear operator only
    double l_min = 0.0;
    double l_max = 0.0;
    int solver_nodes = 0;

    friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

struct Dataset {
    DatasetMeta meta;
    std::vector<OperatorSample> samples;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

// The m fixed sensor locations: equally spaced over [0, 1].
inline Grid sensor_grid(int m) { return Grid::uniform(m); }

// Piecewise-linear evaluation of a field between its grid nodes.
double interpolate(const FieldSample& field, double x);

// Cumulative composite-trapezoid integral of the field from 0 to x, with
// linear interpolation inside the final partial interval. The field grid
// must cover [0, 1] and x must lie in [0, 1].
double antiderivative(const FieldSample& field, double x);

// Solves d/dx( exp(b(x)) du/dx ) = f on the field's uniform grid with
// u(0) = u(1) = 0. Flux coefficients at half-points are the arithmetic mean
// of exp(b) at the adjacent nodes; the interior system is tridiagonal.
// `forcing` gives nodal values of f; the scalar overload uses a constant.
FieldSample solve_spde(const FieldSample& coeff_exponent, const std::vector<double>& forcing);
FieldSample solve_spde(const FieldSample& coeff_exponent, double forcing);

// Per-sample RNG stream: sample i of a dataset with master seed s draws
// everything from Rng(dataset_sample_seed(s, i)). Exposed so callers can
// re-derive any sample independently.
std::uint64_t dataset_sample_seed(std::uint64_t master, std::uint64_t sample_index);

// n fresh GRF draws mapped through the antiderivative operator. Each draw
// is observed at m sensors; each of the `queries` query points per draw is
// sampled uniformly on [0, 1]. Deterministic per seed and independent of
// `threads`.
Dataset gen_linear_dataset(int n, int m, const KernelConfig& kernel, std::uint64_t seed,
                           int fine_grid_points = 1000, int queries = 1, int threads = 1);

// n diffusion-coefficient exponents b ~ GP(0, sigma2 * RBF_l) with per-draw
// length scale l ~ Uniform[1, 2], mapped through the elliptic solve with
// f = 10. Sensors observe b; targets are the interpolated solution.
Dataset gen_nonlinear_dataset(int n, int m, double sigma2, std::uint64_t seed,
                              int solver_nodes = 101, int queries = 1, int threads = 1,
                              double forcing = 10.0);

// Plain-text format: one header line with the metadata, then one sample per
// line as comma-separated values (m sensors, query, target), every double
// printed with 17 significant digits.
void save_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

} // namespace ordent
