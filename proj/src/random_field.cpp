#include "ordent/random_field.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "ordent/errors.hpp"

namespace ordent {

Grid Grid::uniform(int count) {
    if (count < 2) throw invalid_input_error("Grid::uniform: count must be >= 2");
    std::vector<double> pts(count);
    for (int i = 0; i < count; ++i) pts[i] = static_cast<double>(i) / (count - 1);
    pts.back() = 1.0;
    return Grid{std::move(pts)};
}

Grid Grid::from_points(std::vector<double> pts) {
    if (pts.size() < 2) throw invalid_input_error("Grid: need at least 2 points");
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!std::isfinite(pts[i])) throw invalid_input_error("Grid: non-finite coordinate");
        if (pts[i] < 0.0 || pts[i] > 1.0) throw invalid_input_error("Grid: point outside [0,1]");
        if (i > 0 && pts[i] <= pts[i - 1]) throw invalid_input_error("Grid: points not strictly increasing");
    }
    return Grid{std::move(pts)};
}

Grid merge_grids(const Grid& a, const Grid& b) {
    std::vector<double> merged;
    merged.reserve(a.points.size() + b.points.size());
    std::size_t i = 0, j = 0;
    while (i < a.points.size() || j < b.points.size()) {
        double next;
        if (j >= b.points.size() || (i < a.points.size() && a.points[i] <= b.points[j])) {
            next = a.points[i++];
            if (j < b.points.size() && b.points[j] == next) ++j;
        } else {
            next = b.points[j++];
        }
        merged.push_back(next);
    }
    return Grid::from_points(std::move(merged));
}

void KernelConfig::validate() const {
    if (!(length_scale > 0.0) || !std::isfinite(length_scale))
        throw invalid_input_error("KernelConfig: length_scale must be positive");
    if (!(variance > 0.0) || !std::isfinite(variance))
        throw invalid_input_error("KernelConfig: variance must be positive");
    if (jitter < 0.0 || !std::isfinite(jitter))
        throw invalid_input_error("KernelConfig: jitter must be nonnegative");
}

Matrix rbf_kernel_matrix(const Grid& grid, const KernelConfig& cfg) {
    cfg.validate();
    const int n = grid.count();
    if (n < 2) throw invalid_input_error("rbf_kernel_matrix: grid too small");
    for (double x : grid.points)
        if (!std::isfinite(x)) throw invalid_input_error("rbf_kernel_matrix: non-finite coordinate");

    const double inv = 1.0 / (2.0 * cfg.length_scale * cfg.length_scale);
    Matrix k(n, n);
    for (int i = 0; i < n; ++i) {
        k(i, i) = cfg.variance + cfg.jitter;
        for (int j = 0; j < i; ++j) {
            const double d = grid.points[i] - grid.points[j];
            const double v = cfg.variance * std::exp(-d * d * inv);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

namespace {

// Plain in-place Cholesky attempt; returns false on a non-positive pivot.
bool try_cholesky(const Matrix& K, double shift, Matrix& out) {
    const int n = K.rows();
    out = Matrix(n, n);
    for (int j = 0; j < n; ++j) {
        double diag = K(j, j) + shift;
        for (int k = 0; k < j; ++k) diag -= out(j, k) * out(j, k);
        if (!(diag > 0.0) || !std::isfinite(diag)) return false;
        const double ljj = std::sqrt(diag);
        out(j, j) = ljj;
        const double inv = 1.0 / ljj;
        for (int i = j + 1; i < n; ++i) {
            double s = K(i, j);
            const double* ri = out.row(i);
            const double* rj = out.row(j);
            for (int k = 0; k < j; ++k) s -= ri[k] * rj[k];
            out(i, j) = s * inv;
        }
    }
    return true;
}

} // namespace

Matrix factor_covariance(const Matrix& K) {
    const int n = K.rows();
    if (n == 0 || K.cols() != n) throw invalid_input_error("factor_covariance: matrix must be square");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j)
            if (K(i, j) != K(j, i)) throw invalid_input_error("factor_covariance: matrix not symmetric");

    Matrix L;
    if (try_cholesky(K, 0.0, L)) return L;
    for (double shift = 1e-10; shift <= 1e-6 * (1.0 + 1e-12); shift *= 10.0) {
        if (try_cholesky(K, shift, L)) return L;
    }
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "factor_covariance: factorization failed for %d x %d matrix after jitter escalation to 1e-6", n, n);
    throw numerical_error(buf);
}

FieldSample sample_grf(const Grid& grid, const Matrix& factor, Rng& rng) {
    const int n = grid.count();
    if (factor.rows() != n || factor.cols() != n)
        throw invalid_input_error("sample_grf: factor dimension does not match grid");
    std::vector<double> xi(n);
    for (int i = 0; i < n; ++i) xi[i] = rng.normal();
    std::vector<double> values(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* li = factor.row(i);
        double s = 0.0;
        for (int j = 0; j <= i; ++j) s += li[j] * xi[j];
        values[i] = s;
    }
    return FieldSample{grid, std::move(values)};
}

FieldSample sample_grf(const Grid& grid, const Matrix& factor, std::uint64_t seed) {
    Rng rng(seed);
    return sample_grf(grid, factor, rng);
}

} // namespace ordent
