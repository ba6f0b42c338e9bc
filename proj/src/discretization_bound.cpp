#include "ordent/discretization_bound.hpp"

#include <cmath>
#include <limits>

#include "ordent/errors.hpp"
#include "ordent/objectives.hpp"
#include "ordent/rng.hpp"

namespace ordent {

namespace {

std::vector<double> predictions(const std::vector<double>& theta, const Matrix& features) {
    const int n = features.rows();
    const int d = features.cols();
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        const double* z = features.row(i);
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += theta[k] * z[k];
        out[i] = s;
    }
    return out;
}

} // namespace

void BoundInstance::validate() const {
    const int n = features.rows();
    if (n < 1) throw invalid_input_error("BoundInstance: empty feature matrix");
    if (static_cast<int>(theta.size()) != features.cols())
        throw invalid_input_error("BoundInstance: theta length mismatch");
    if (static_cast<int>(labels.size()) != n || static_cast<int>(centers.size()) != n)
        throw invalid_input_error("BoundInstance: label/center count mismatch");
    if (!(eta >= 0.0)) throw invalid_input_error("BoundInstance: eta must be >= 0");
    for (int i = 0; i < n; ++i)
        if (std::abs(centers[i] - labels[i]) > 0.5 * eta + 1e-12)
            throw invalid_input_error("BoundInstance: |c_i - y_i| exceeds eta / 2");
}

BoundReport check_discretization_bound(const BoundInstance& instance) {
    instance.validate();
    const int n = instance.features.rows();
    const std::vector<double> pred = predictions(instance.theta, instance.features);

    KahanSum mse_y, mse_c, residual;
    for (int i = 0; i < n; ++i) {
        const double ry = pred[i] - instance.labels[i];
        const double rc = pred[i] - instance.centers[i];
        mse_y.add(ry * ry);
        mse_c.add(rc * rc);
        residual.add(std::abs(2.0 * pred[i] - instance.centers[i] - instance.labels[i]));
    }
    BoundReport r;
    r.lhs = std::abs(mse_y.value() - mse_c.value()) / n;
    r.bound = instance.eta * residual.value() / (2.0 * n);
    r.eta_used = instance.eta;
    r.holds = r.lhs <= r.bound + 1e-12;
    return r;
}

EtaResult eta_for_epsilon(const std::vector<double>& theta, const Matrix& features,
                          const std::vector<double>& labels, double epsilon) {
    if (!(epsilon > 0.0)) throw invalid_input_error("eta_for_epsilon: epsilon must be positive");
    const int n = features.rows();
    if (n < 1 || static_cast<int>(labels.size()) != n)
        throw invalid_input_error("eta_for_epsilon: shape mismatch");
    const std::vector<double> pred = predictions(theta, features);
    KahanSum sum;
    for (int i = 0; i < n; ++i) sum.add(std::abs(2.0 * pred[i] - 2.0 * labels[i]));
    if (sum.value() == 0.0) return EtaResult{std::numeric_limits<double>::infinity(), true};
    const double eta = std::min(n * epsilon / sum.value(), std::sqrt(epsilon));
    return EtaResult{eta, false};
}

FuzzSummary run_bound_fuzz(int count, std::uint64_t seed, double epsilon) {
    if (count < 1) throw invalid_input_error("run_bound_fuzz: count must be >= 1");
    FuzzSummary summary;
    summary.total = count;
    summary.epsilon = epsilon;
    summary.worst_slack = -std::numeric_limits<double>::infinity();

    for (int t = 0; t < count; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        const int n = 1 + static_cast<int>(rng.uniform_below(64));
        const int dim = 1 + static_cast<int>(rng.uniform_below(16));
        const int bins = 1 + static_cast<int>(rng.uniform_below(32));

        BoundInstance inst;
        inst.theta.resize(dim);
        for (double& v : inst.theta) v = rng.normal();
        inst.features = Matrix(n, dim);
        for (double& v : inst.features.data()) v = rng.normal();
        inst.labels.resize(n);
        // Labels near the predictions plus noise, so residual scales vary.
        const std::vector<double> pred = predictions(inst.theta, inst.features);
        for (int i = 0; i < n; ++i) inst.labels[i] = pred[i] + rng.normal() * rng.uniform(0.0, 2.0);

        double lo = inst.labels[0], hi = inst.labels[0];
        for (double y : inst.labels) {
            lo = std::min(lo, y);
            hi = std::max(hi, y);
        }
        if (!(hi > lo)) hi = lo + 1.0;
        // Widen the range if needed to keep the bin width at or below 0.5.
        double width = (hi - lo) / bins;
        if (width > 0.5) {
            const int needed = static_cast<int>(std::ceil((hi - lo) / 0.5));
            width = (hi - lo) / needed;
            const Discretized d = discretize_targets(inst.labels, needed, lo, hi);
            inst.centers = d.centers;
            inst.eta = d.bin_width;
        } else {
            const Discretized d = discretize_targets(inst.labels, bins, lo, hi);
            inst.centers = d.centers;
            inst.eta = d.bin_width;
        }

        const BoundReport r = check_discretization_bound(inst);
        if (r.holds) ++summary.holds;
        summary.worst_slack = std::max(summary.worst_slack, r.lhs - r.bound);

        const EtaResult er = eta_for_epsilon(inst.theta, inst.features, inst.labels, epsilon);
        if (!er.unbounded) {
            ++summary.eta_rechecks;
            const int rebins = std::max(1, static_cast<int>(std::ceil((hi - lo) / er.eta)));
            const Discretized d = discretize_targets(inst.labels, rebins, lo, hi);
            BoundInstance fine = inst;
            fine.centers = d.centers;
            fine.eta = d.bin_width;
            const BoundReport rf = check_discretization_bound(fine);
            summary.max_lhs_after_eta = std::max(summary.max_lhs_after_eta, rf.lhs);
        }
    }
    return summary;
}

} // namespace ordent
