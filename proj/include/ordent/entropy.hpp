#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "ordent/matrix.hpp"

namespace ordent {

// Distance-based differential entropy estimate (additive constant dropped):
//   (D / (N(N-1))) * sum_{i != j} log(||z_i - z_j||^2 + epsilon)
// All uses are comparative, so the constant never matters.
struct EntropyEstimate {
    double value = 0.0;
    int n = 0;
    int dim = 0;
    bool normalized_inputs = false;
};

// epsilon guards the log against duplicate points; with epsilon = 0 a
// duplicate pair raises numerical_error. normalized_inputs = true first
// L2-normalizes each row.
EntropyEstimate mean_nn_entropy(const Matrix& points, double epsilon = 1e-12,
                                bool normalized_inputs = false);

// Per-epoch entropy record for one training run and split; epochs must be
// appended in strictly increasing order.
struct EntropyTrace {
    struct Entry {
        int epoch = 0;
        EntropyEstimate estimate;
    };

    std::string split;
    std::string method;
    std::vector<Entry> entries;

    void update(int epoch, const Matrix& points, double epsilon = 1e-12, bool normalized_inputs = false);
};

// CSV export: header "epoch,split,method,entropy", one row per entry.
void write_trace_csv(std::ostream& out, const std::vector<EntropyTrace>& traces);

} // namespace ordent
