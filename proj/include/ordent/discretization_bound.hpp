#pragma once

#include <cstdint>
#include <vector>

#include "ordent/matrix.hpp"

namespace ordent {

// Instance of the label-discretization inequality for a linear regressor:
// replacing each label y_i by its bin center c_i changes the mean squared
// error by at most (eta / 2n) * sum_i |2 theta^T z_i - c_i - y_i|, where eta
// is the maximum bin width and |c_i - y_i| <= eta / 2.
struct BoundInstance {
    std::vector<double> theta;    // regressor weights, length D
    Matrix features;              // n x D
    std::vector<double> labels;   // n
    std::vector<double> centers;  // n, bin center per label
    double eta = 0.0;             // maximum bin width

    void validate() const;
};

struct BoundReport {
    double lhs = 0.0;         // |mse(y) - mse(c)|
    double bound = 0.0;       // (eta / 2n) * sum |2 theta^T z - c - y|
    double epsilon_target = 0.0;
    double eta_used = 0.0;
    bool holds = false;       // lhs <= bound + 1e-12
};

BoundReport check_discretization_bound(const BoundInstance& instance);

// Bin width that keeps the discretization gap below epsilon: half the
// bound 2n epsilon / sum_i |2 theta^T z_i - 2 y_i| (the centers-at-labels
// limit), additionally capped at sqrt(epsilon) so re-binning with the
// returned width cannot push the gap past epsilon. A zero denominator
// (every prediction equals its label) reports unbounded.
struct EtaResult {
    double eta = 0.0;
    bool unbounded = false;
};
EtaResult eta_for_epsilon(const std::vector<double>& theta, const Matrix& features,
                          const std::vector<double>& labels, double epsilon);

// Randomized verification: `count` instances with n <= 64, D <= 16 and
// uniform label bins of width <= 0.5, each checked both ways.
struct FuzzSummary {
    int total = 0;
    int holds = 0;
    double worst_slack = 0.0;       // max(lhs - bound) over instances
    double max_lhs_after_eta = 0.0; // largest re-binned gap using eta_for_epsilon
    int eta_rechecks = 0;           // instances where the re-check ran
    double epsilon = 0.0;
};
FuzzSummary run_bound_fuzz(int count, std::uint64_t seed, double epsilon = 1e-3);

} // namespace ordent
