#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ordent/matrix.hpp"
#include "ordent/network.hpp"

namespace ordent {

// Label-space weighting applied to each feature pair in the diversity term.
enum class WeightFn { l2, squared_l2, sqrt_l2, constant_one };

enum class FeatureDistance { l2, cosine };

struct RegularizerConfig {
    double lambda_d = 0.0;
    double lambda_t = 0.0;
    int sample_size_m = 0;  // 0 = use the full batch
    WeightFn weight_fn = WeightFn::l2;
    FeatureDistance feature_distance = FeatureDistance::l2;
    bool normalize_features = true;
    int label_bins_for_centers = 10;
    bool detach_centers = false;

    void validate() const;
};

struct LossBreakdown {
    double task_loss = 0.0;
    double diversity = 0.0;
    double tightness = 0.0;
    double total = 0.0;
};

// Mean squared error and its gradient 2(yhat - y)/N.
double mse_loss(std::span<const double> yhat, std::span<const double> y, std::span<double> grad_yhat);
double mse_loss(std::span<const double> yhat, std::span<const double> y);

// Uniform binning of continuous targets into K classes over [lo, hi].
// Out-of-range values clamp to the boundary bins and are counted.
struct Discretized {
    std::vector<int> indices;
    std::vector<double> centers;  // bin center per sample
    double bin_width = 0.0;
    int clamped_low = 0;
    int clamped_high = 0;
};
Discretized discretize_targets(std::span<const double> y, int bins, double lo, double hi);

// Mean negative log-softmax of the true class; max-subtraction stabilized.
// grad_logits (same shape as logits) receives (softmax - onehot)/N.
double cross_entropy_loss(const Matrix& logits, const std::vector<int>& classes, Matrix* grad_logits = nullptr);

// Negative mean weighted pairwise feature distance over all ordered pairs:
//   -(1 / (M(M-1))) * sum_{i != j} w_ij * dist(f_i, f_j)
// with w_ij from the label distance |y_i - y_j| through weight_fn, and dist
// either the Euclidean norm or cosine distance 1 - f_i . f_j. Zero-distance
// pairs contribute zero gradient. Always <= 0.
double diversity_loss(const Matrix& features, std::span<const double> labels, WeightFn weight_fn,
                      FeatureDistance distance, Matrix* grad_features = nullptr);

// Mean distance of each feature to the mean feature of its label bin.
// Singleton bins contribute zero. With detach_centers the center is treated
// as constant in the gradient; otherwise the gradient flows through the
// mean.
double tightness_loss(const Matrix& features, std::span<const double> labels, int bins,
                      bool detach_centers = false, Matrix* grad_features = nullptr);

// M indices drawn uniformly without replacement from [0, batch); the draw is
// a pure function of (seed, step).
std::vector<int> subsample_for_diversity(int batch, int m, std::uint64_t seed, std::uint64_t step);

// Adds the configured lambda-scaled diversity and tightness gradients into
// `grads` (on normalized features, or raw when normalize_features is off)
// and fills the diversity/tightness entries of `breakdown`. (seed, step)
// select the diversity subsample.
void add_regularizer_terms(const ForwardCache& cache, std::span<const double> y,
                           const RegularizerConfig& cfg, std::uint64_t seed, std::uint64_t step,
                           UpstreamGrads& grads, LossBreakdown& breakdown);

// Total training objective on a forward pass: MSE on the predictions plus
// lambda_d * diversity on the M-subsample plus lambda_t * tightness, both on
// normalized features (raw features when normalize_features is off).
struct TotalLossResult {
    LossBreakdown breakdown;
    UpstreamGrads grads;
};
TotalLossResult total_loss(const ForwardCache& cache, std::span<const double> y,
                           const RegularizerConfig& cfg, std::uint64_t seed, std::uint64_t step);

} // namespace ordent
