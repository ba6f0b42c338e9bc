#include "ordent/entropy.hpp"

#include <cmath>
#include <cstdio>

#include "ordent/errors.hpp"

namespace ordent {

EntropyEstimate mean_nn_entropy(const Matrix& points, double epsilon, bool normalized_inputs) {
    const int n = points.rows();
    const int dim = points.cols();
    if (n < 2) throw invalid_input_error("mean_nn_entropy: need at least 2 points");
    if (epsilon < 0.0) throw invalid_input_error("mean_nn_entropy: epsilon must be >= 0");

    const Matrix* z = &points;
    Matrix normalized;
    if (normalized_inputs) {
        normalized = points;
        for (int i = 0; i < n; ++i) {
            double* row = normalized.row(i);
            double norm2 = 0.0;
            for (int k = 0; k < dim; ++k) norm2 += row[k] * row[k];
            const double norm = std::max(std::sqrt(norm2), 1e-12);
            for (int k = 0; k < dim; ++k) row[k] /= norm;
        }
        z = &normalized;
    }

    // Unordered pairs, each counted twice by the i != j double sum.
    KahanSum acc;
    for (int i = 0; i < n; ++i) {
        const double* zi = z->row(i);
        for (int j = i + 1; j < n; ++j) {
            const double* zj = z->row(j);
            double d2 = 0.0;
            for (int k = 0; k < dim; ++k) {
                const double diff = zi[k] - zj[k];
                d2 += diff * diff;
            }
            const double arg = d2 + epsilon;
            if (arg <= 0.0)
                throw numerical_error("mean_nn_entropy: duplicate points with epsilon = 0");
            acc.add(std::log(arg));
        }
    }
    const double value = 2.0 * acc.value() * dim / (static_cast<double>(n) * (n - 1));
    return EntropyEstimate{value, n, dim, normalized_inputs};
}

void EntropyTrace::update(int epoch, const Matrix& points, double epsilon, bool normalized_inputs) {
    if (!entries.empty() && epoch <= entries.back().epoch)
        throw invalid_input_error("EntropyTrace: epochs must be strictly increasing");
    entries.push_back(Entry{epoch, mean_nn_entropy(points, epsilon, normalized_inputs)});
}

void write_trace_csv(std::ostream& out, const std::vector<EntropyTrace>& traces) {
    out << "epoch,split,method,entropy\n";
    char buf[40];
    for (const auto& t : traces) {
        for (const auto& e : t.entries) {
            std::snprintf(buf, sizeof buf, "%.17g", e.estimate.value);
            out << e.epoch << ',' << t.split << ',' << t.method << ',' << buf << '\n';
        }
    }
}

} // namespace ordent
