#include "ordent/datagen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <string>
#include <thread>

#include "ordent/errors.hpp"

namespace ordent {

namespace {

void run_indexed(int n, int threads, const std::function<void(int)>& body) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

// Indices of `sub` points inside `grid` (exact coordinate matches).
std::vector<int> locate(const Grid& grid, const Grid& sub) {
    std::vector<int> idx(sub.points.size());
    std::size_t j = 0;
    for (std::size_t i = 0; i < sub.points.size(); ++i) {
        while (j < grid.points.size() && grid.points[j] != sub.points[i]) ++j;
        if (j == grid.points.size()) throw invalid_input_error("locate: sub-grid point missing from grid");
        idx[i] = static_cast<int>(j);
    }
    return idx;
}

std::vector<double> gather(const std::vector<double>& values, const std::vector<int>& idx) {
    std::vector<double> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = values[idx[i]];
    return out;
}

} // namespace

double interpolate(const FieldSample& field, double x) {
    const auto& pts = field.grid.points;
    if (x < pts.front() || x > pts.back()) throw invalid_input_error("interpolate: x outside grid range");
    auto it = std::upper_bound(pts.begin(), pts.end(), x);
    if (it == pts.begin()) return field.values.front();
    if (it == pts.end()) return field.values.back();
    const std::size_t hi = static_cast<std::size_t>(it - pts.begin());
    const std::size_t lo = hi - 1;
    const double t = (x - pts[lo]) / (pts[hi] - pts[lo]);
    return field.values[lo] + t * (field.values[hi] - field.values[lo]);
}

double antiderivative(const FieldSample& field, double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw invalid_input_error("antiderivative: x outside [0,1]");
    const auto& pts = field.grid.points;
    const auto& u = field.values;
    if (pts.front() != 0.0 || pts.back() != 1.0)
        throw invalid_input_error("antiderivative: field grid must cover [0,1]");

    double acc = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k) {
        if (pts[k] >= x) {
            const double t = x - pts[k - 1];
            const double ux = u[k - 1] + (u[k] - u[k - 1]) * (t / (pts[k] - pts[k - 1]));
            return acc + 0.5 * t * (u[k - 1] + ux);
        }
        acc += 0.5 * (pts[k] - pts[k - 1]) * (u[k] + u[k - 1]);
    }
    return acc;
}

FieldSample solve_spde(const FieldSample& coeff_exponent, const std::vector<double>& forcing) {
    const auto& pts = coeff_exponent.grid.points;
    const int nodes = static_cast<int>(pts.size());
    if (nodes < 18) throw invalid_input_error("solve_spde: need at least 16 interior points");
    if (forcing.size() != pts.size()) throw invalid_input_error("solve_spde: forcing length mismatch");
    const double h = pts[1] - pts[0];
    for (int i = 1; i < nodes; ++i)
        if (std::abs((pts[i] - pts[i - 1]) - h) > 1e-12 * std::max(1.0, h))
            throw invalid_input_error("solve_spde: grid must be uniform");

    // exp(b) at nodes, averaged onto interval midpoints.
    std::vector<double> a(nodes);
    for (int i = 0; i < nodes; ++i) {
        a[i] = std::exp(coeff_exponent.values[i]);
        if (!std::isfinite(a[i]) || a[i] <= 0.0)
            throw numerical_error("solve_spde: coefficient exp(b) not positive and finite");
    }
    std::vector<double> half(nodes - 1);
    for (int i = 0; i + 1 < nodes; ++i) half[i] = 0.5 * (a[i] + a[i + 1]);

    const int ni = nodes - 2;
    std::vector<double> diag(ni), upper(ni), rhs(ni);
    for (int i = 0; i < ni; ++i) {
        diag[i] = -(half[i] + half[i + 1]);
        upper[i] = half[i + 1];
        rhs[i] = forcing[i + 1] * h * h;
    }

    // Thomas elimination; lower[i] = half[i].
    for (int i = 1; i < ni; ++i) {
        if (diag[i - 1] == 0.0) throw numerical_error("solve_spde: singular tridiagonal system");
        const double w = half[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    std::vector<double> u(nodes, 0.0);
    if (diag[ni - 1] == 0.0) throw numerical_error("solve_spde: singular tridiagonal system");
    u[ni] = rhs[ni - 1] / diag[ni - 1];
    for (int i = ni - 2; i >= 0; --i) u[i + 1] = (rhs[i] - upper[i] * u[i + 2]) / diag[i];
    return FieldSample{coeff_exponent.grid, std::move(u)};
}

FieldSample solve_spde(const FieldSample& coeff_exponent, double forcing) {
    return solve_spde(coeff_exponent, std::vector<double>(coeff_exponent.grid.points.size(), forcing));
}

std::uint64_t dataset_sample_seed(std::uint64_t master, std::uint64_t sample_index) {
    return derive_seed(master, sample_index);
}

Dataset gen_linear_dataset(int n, int m, const KernelConfig& kernel, std::uint64_t seed,
                           int fine_grid_points, int queries, int threads) {
    if (n < 1) throw invalid_input_error("gen_linear_dataset: n must be >= 1");
    if (m < 2) throw invalid_input_error("gen_linear_dataset: m must be >= 2");
    if (queries < 1) throw invalid_input_error("gen_linear_dataset: queries must be >= 1");
    kernel.validate();

    const Grid sensors = sensor_grid(m);
    const Grid field_grid = merge_grids(Grid::uniform(fine_grid_points), sensors);
    const std::vector<int> sensor_idx = locate(field_grid, sensors);
    const Matrix factor = factor_covariance(rbf_kernel_matrix(field_grid, kernel));

    Dataset d;
    d.meta = DatasetMeta{DatasetKind::linear, n,   m, queries, seed, kernel.variance,
                         kernel.length_scale, fine_grid_points, 0.0, 0.0, 0};
    d.samples.resize(static_cast<std::size_t>(n) * queries);
    run_indexed(n, threads, [&](int i) {
        Rng rng(dataset_sample_seed(seed, static_cast<std::uint64_t>(i)));
        const FieldSample field = sample_grf(field_grid, factor, rng);
        const std::vector<double> sensor_values = gather(field.values, sensor_idx);
        for (int q = 0; q < queries; ++q) {
            const double y = rng.uniform();
            d.samples[static_cast<std::size_t>(i) * queries + q] =
                OperatorSample{sensor_values, y, antiderivative(field, y)};
        }
    });
    return d;
}

Dataset gen_nonlinear_dataset(int n, int m, double sigma2, std::uint64_t seed,
                              int solver_nodes, int queries, int threads, double forcing) {
    if (n < 1) throw invalid_input_error("gen_nonlinear_dataset: n must be >= 1");
    if (m < 2) throw invalid_input_error("gen_nonlinear_dataset: m must be >= 2");
    if (queries < 1) throw invalid_input_error("gen_nonlinear_dataset: queries must be >= 1");
    if (!(sigma2 > 0.0)) throw invalid_input_error("gen_nonlinear_dataset: sigma2 must be positive");

    const Grid sensors = sensor_grid(m);
    const Grid solver = Grid::uniform(solver_nodes);
    const Grid field_grid = merge_grids(solver, sensors);
    const std::vector<int> sensor_idx = locate(field_grid, sensors);
    const std::vector<int> solver_idx = locate(field_grid, solver);

    Dataset d;
    d.meta = DatasetMeta{DatasetKind::nonlinear, n, m,   queries, seed, sigma2,
                         0.0, 0, 1.0, 2.0, solver_nodes};
    d.samples.resize(static_cast<std::size_t>(n) * queries);
    run_indexed(n, threads, [&](int i) {
        Rng rng(dataset_sample_seed(seed, static_cast<std::uint64_t>(i)));
        const double l = rng.uniform(1.0, 2.0);
        const Matrix factor = factor_covariance(rbf_kernel_matrix(field_grid, KernelConfig{l, sigma2, 0.0}));
        const FieldSample b = sample_grf(field_grid, factor, rng);
        const FieldSample b_solver{solver, gather(b.values, solver_idx)};
        const FieldSample u = solve_spde(b_solver, forcing);
        const std::vector<double> sensor_values = gather(b.values, sensor_idx);
        for (int q = 0; q < queries; ++q) {
            const double x = rng.uniform();
            d.samples[static_cast<std::size_t>(i) * queries + q] =
                OperatorSample{sensor_values, x, interpolate(u, x)};
        }
    });
    return d;
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* kind_name(DatasetKind k) { return k == DatasetKind::linear ? "linear" : "nonlinear"; }

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& s) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end != begin + s.size() || s.empty())
        throw data_error(data_error::kind::malformed_file, "dataset: unparseable number '" + s + "'");
    return v;
}

long long parse_int(const std::string& s) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const long long v = std::strtoll(begin, &end, 10);
    if (end != begin + s.size() || s.empty())
        throw data_error(data_error::kind::malformed_file, "dataset: unparseable integer '" + s + "'");
    return v;
}

} // namespace

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw data_error(data_error::kind::io_failure, "save_dataset: cannot open " + path.string());
    const auto& meta = d.meta;
    out << "ordent-dataset,version=1"
        << ",kind=" << kind_name(meta.kind) << ",n=" << meta.n << ",m=" << meta.m
        << ",queries_per_function=" << meta.queries_per_function << ",seed=" << meta.seed
        << ",variance=" << fmt17(meta.variance);
    if (meta.kind == DatasetKind::linear) {
        out << ",length_scale=" << fmt17(meta.length_scale)
            << ",fine_grid_points=" << meta.fine_grid_points;
    } else {
        out << ",l_min=" << fmt17(meta.l_min) << ",l_max=" << fmt17(meta.l_max)
            << ",solver_nodes=" << meta.solver_nodes;
    }
    out << '\n';
    std::string line;
    for (const auto& s : d.samples) {
        line.clear();
        for (double v : s.sensors) {
            line += fmt17(v);
            line += ',';
        }
        line += fmt17(s.query);
        line += ',';
        line += fmt17(s.target);
        out << line << '\n';
    }
    if (!out) throw data_error(data_error::kind::io_failure, "save_dataset: write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error(data_error::kind::io_failure, "load_dataset: cannot open " + path.string());
    std::string header;
    if (!std::getline(in, header))
        throw data_error(data_error::kind::malformed_file, "load_dataset: empty file");
    const auto fields = split_csv(header);
    if (fields.empty() || fields[0] != "ordent-dataset")
        throw data_error(data_error::kind::malformed_file, "load_dataset: missing dataset magic");

    DatasetMeta meta;
    bool kind_seen = false, version_ok = false;
    for (std::size_t i = 1; i < fields.size(); ++i) {
        const auto eq = fields[i].find('=');
        if (eq == std::string::npos)
            throw data_error(data_error::kind::malformed_file, "load_dataset: bad header field '" + fields[i] + "'");
        const std::string key = fields[i].substr(0, eq);
        const std::string val = fields[i].substr(eq + 1);
        if (key == "version") {
            if (val != "1")
                throw data_error(data_error::kind::version_mismatch, "load_dataset: unsupported version " + val);
            version_ok = true;
        } else if (key == "kind") {
            if (val == "linear") meta.kind = DatasetKind::linear;
            else if (val == "nonlinear") meta.kind = DatasetKind::nonlinear;
            else throw data_error(data_error::kind::malformed_file, "load_dataset: unknown kind " + val);
            kind_seen = true;
        } else if (key == "n") meta.n = static_cast<int>(parse_int(val));
        else if (key == "m") meta.m = static_cast<int>(parse_int(val));
        else if (key == "queries_per_function") meta.queries_per_function = static_cast<int>(parse_int(val));
        else if (key == "seed") meta.seed = static_cast<std::uint64_t>(parse_int(val));
        else if (key == "variance") meta.variance = parse_double(val);
        else if (key == "length_scale") meta.length_scale = parse_double(val);
        else if (key == "fine_grid_points") meta.fine_grid_points = static_cast<int>(parse_int(val));
        else if (key == "l_min") meta.l_min = parse_double(val);
        else if (key == "l_max") meta.l_max = parse_double(val);
        else if (key == "solver_nodes") meta.solver_nodes = static_cast<int>(parse_int(val));
        else throw data_error(data_error::kind::malformed_file, "load_dataset: unknown header key " + key);
    }
    if (!version_ok) throw data_error(data_error::kind::version_mismatch, "load_dataset: header lacks version");
    if (!kind_seen || meta.n < 1 || meta.m < 2 || meta.queries_per_function < 1)
        throw data_error(data_error::kind::malformed_file, "load_dataset: incomplete header");
    if (meta.kind == DatasetKind::linear) {
        meta.l_min = meta.l_max = 0.0;
        meta.solver_nodes = 0;
    } else {
        meta.length_scale = 0.0;
        meta.fine_grid_points = 0;
    }

    Dataset d;
    d.meta = meta;
    const std::size_t expected = static_cast<std::size_t>(meta.n) * meta.queries_per_function;
    d.samples.reserve(expected);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != static_cast<std::size_t>(meta.m) + 2)
            throw data_error(data_error::kind::inconsistent,
                             "load_dataset: row has " + std::to_string(cells.size()) +
                                 " fields, header says m=" + std::to_string(meta.m));
        OperatorSample s;
        s.sensors.resize(meta.m);
        for (int j = 0; j < meta.m; ++j) s.sensors[j] = parse_double(cells[j]);
        s.query = parse_double(cells[meta.m]);
        s.target = parse_double(cells[meta.m + 1]);
        if (!(s.query >= 0.0 && s.query <= 1.0) || !std::isfinite(s.target))
            throw data_error(data_error::kind::inconsistent, "load_dataset: sample violates invariants");
        d.samples.push_back(std::move(s));
    }
    if (d.samples.size() != expected)
        throw data_error(data_error::kind::malformed_file,
                         "load_dataset: expected " + std::to_string(expected) + " rows, found " +
                             std::to_string(d.samples.size()));
    return d;
}

} // namespace ordent
