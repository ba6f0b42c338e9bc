#include "ordent/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "ordent/errors.hpp"
#include "ordent/rng.hpp"

namespace ordent {

void RegularizerConfig::validate() const {
    if (lambda_d < 0.0 || lambda_t < 0.0) throw invalid_input_error("RegularizerConfig: lambda must be >= 0");
    if (sample_size_m < 0) throw invalid_input_error("RegularizerConfig: sample_size_m must be >= 0");
    if (label_bins_for_centers < 1) throw invalid_input_error("RegularizerConfig: label_bins_for_centers must be >= 1");
}

double mse_loss(std::span<const double> yhat, std::span<const double> y, std::span<double> grad_yhat) {
    const std::size_t n = yhat.size();
    if (n == 0 || y.size() != n) throw invalid_input_error("mse_loss: length mismatch");
    if (!grad_yhat.empty() && grad_yhat.size() != n) throw invalid_input_error("mse_loss: gradient length mismatch");
    KahanSum acc;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = yhat[i] - y[i];
        acc.add(r * r);
        if (!grad_yhat.empty()) grad_yhat[i] = 2.0 * r / static_cast<double>(n);
    }
    return acc.value() / static_cast<double>(n);
}

double mse_loss(std::span<const double> yhat, std::span<const double> y) {
    return mse_loss(yhat, y, {});
}

Discretized discretize_targets(std::span<const double> y, int bins, double lo, double hi) {
    if (bins < 1) throw invalid_input_error("discretize_targets: bins must be >= 1");
    if (!(hi > lo)) throw invalid_input_error("discretize_targets: range must satisfy hi > lo");
    Discretized d;
    d.bin_width = (hi - lo) / bins;
    d.indices.resize(y.size());
    d.centers.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] < lo) ++d.clamped_low;
        if (y[i] > hi) ++d.clamped_high;
        int idx = static_cast<int>(std::floor((y[i] - lo) / d.bin_width));
        idx = std::clamp(idx, 0, bins - 1);
        d.indices[i] = idx;
        d.centers[i] = lo + (idx + 0.5) * d.bin_width;
    }
    return d;
}

double cross_entropy_loss(const Matrix& logits, const std::vector<int>& classes, Matrix* grad_logits) {
    const int n = logits.rows();
    const int k = logits.cols();
    if (n < 1 || k < 2) throw invalid_input_error("cross_entropy_loss: need batch >= 1 and K >= 2");
    if (static_cast<int>(classes.size()) != n) throw invalid_input_error("cross_entropy_loss: class count mismatch");
    if (grad_logits) *grad_logits = Matrix(n, k);

    KahanSum acc;
    std::vector<double> p(k);
    for (int r = 0; r < n; ++r) {
        const int c = classes[r];
        if (c < 0 || c >= k) throw invalid_input_error("cross_entropy_loss: class index out of range");
        const double* row = logits.row(r);
        const double mx = *std::max_element(row, row + k);
        double denom = 0.0;
        for (int j = 0; j < k; ++j) {
            p[j] = std::exp(row[j] - mx);
            denom += p[j];
        }
        acc.add(std::log(denom) - (row[c] - mx));
        if (grad_logits) {
            double* g = grad_logits->row(r);
            for (int j = 0; j < k; ++j) g[j] = (p[j] / denom - (j == c ? 1.0 : 0.0)) / n;
        }
    }
    return acc.value() / n;
}

namespace {

double pair_weight(double yi, double yj, WeightFn fn) {
    const double d = std::abs(yi - yj);
    switch (fn) {
        case WeightFn::l2: return d;
        case WeightFn::squared_l2: return d * d;
        case WeightFn::sqrt_l2: return std::sqrt(d);
        case WeightFn::constant_one: return 1.0;
    }
    return 0.0;
}

} // namespace

double diversity_loss(const Matrix& features, std::span<const double> labels, WeightFn weight_fn,
                      FeatureDistance distance, Matrix* grad_features) {
    const int m = features.rows();
    const int dim = features.cols();
    if (m < 2) throw invalid_input_error("diversity_loss: need at least 2 samples");
    if (static_cast<int>(labels.size()) != m) throw invalid_input_error("diversity_loss: label count mismatch");
    if (grad_features) *grad_features = Matrix(m, dim);

    // Ordered pairs double each unordered pair; fold the 2 into the scale.
    const double scale = -2.0 / (static_cast<double>(m) * (m - 1));
    KahanSum acc;
    for (int i = 0; i < m; ++i) {
        const double* fi = features.row(i);
        for (int j = i + 1; j < m; ++j) {
            const double* fj = features.row(j);
            const double w = pair_weight(labels[i], labels[j], weight_fn);
            if (distance == FeatureDistance::l2) {
                double d2 = 0.0;
                for (int k = 0; k < dim; ++k) {
                    const double diff = fi[k] - fj[k];
                    d2 += diff * diff;
                }
                const double d = std::sqrt(d2);
                acc.add(w * d);
                if (grad_features && w != 0.0 && d > 0.0) {
                    const double coef = scale * w / d;
                    double* gi = grad_features->row(i);
                    double* gj = grad_features->row(j);
                    for (int k = 0; k < dim; ++k) {
                        const double g = coef * (fi[k] - fj[k]);
                        gi[k] += g;
                        gj[k] -= g;
                    }
                }
            } else {
                double dot = 0.0;
                for (int k = 0; k < dim; ++k) dot += fi[k] * fj[k];
                acc.add(w * (1.0 - dot));
                if (grad_features && w != 0.0) {
                    const double coef = -scale * w;
                    double* gi = grad_features->row(i);
                    double* gj = grad_features->row(j);
                    for (int k = 0; k < dim; ++k) {
                        gi[k] += coef * fj[k];
                        gj[k] += coef * fi[k];
                    }
                }
            }
        }
    }
    return scale * acc.value();
}

double tightness_loss(const Matrix& features, std::span<const double> labels, int bins,
                      bool detach_centers, Matrix* grad_features) {
    const int n = features.rows();
    const int dim = features.cols();
    if (n < 1) throw invalid_input_error("tightness_loss: empty batch");
    if (static_cast<int>(labels.size()) != n) throw invalid_input_error("tightness_loss: label count mismatch");
    if (grad_features) *grad_features = Matrix(n, dim);

    // Bin over the observed label range; a degenerate range is one group.
    std::vector<int> group(n, 0);
    int group_count = 1;
    const auto [lo_it, hi_it] = std::minmax_element(labels.begin(), labels.end());
    if (*hi_it > *lo_it) {
        const Discretized d = discretize_targets(labels, bins, *lo_it, *hi_it);
        group = d.indices;
        group_count = bins;
    }

    std::vector<int> size(group_count, 0);
    Matrix centers(group_count, dim);
    for (int i = 0; i < n; ++i) {
        ++size[group[i]];
        const double* f = features.row(i);
        double* c = centers.row(group[i]);
        for (int k = 0; k < dim; ++k) c[k] += f[k];
    }
    for (int g = 0; g < group_count; ++g) {
        if (size[g] == 0) continue;
        double* c = centers.row(g);
        for (int k = 0; k < dim; ++k) c[k] /= size[g];
    }

    // Unit vectors from each center to its feature; zero at the kink.
    Matrix unit(n, dim);
    KahanSum acc;
    for (int i = 0; i < n; ++i) {
        const double* f = features.row(i);
        const double* c = centers.row(group[i]);
        double d2 = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double diff = f[k] - c[k];
            d2 += diff * diff;
        }
        const double d = std::sqrt(d2);
        acc.add(d);
        if (d > 0.0) {
            double* u = unit.row(i);
            for (int k = 0; k < dim; ++k) u[k] = (f[k] - c[k]) / d;
        }
    }
    const double loss = acc.value() / n;

    if (grad_features) {
        Matrix group_mean_unit(group_count, dim);
        if (!detach_centers) {
            for (int i = 0; i < n; ++i) {
                const double* u = unit.row(i);
                double* gm = group_mean_unit.row(group[i]);
                for (int k = 0; k < dim; ++k) gm[k] += u[k];
            }
            for (int g = 0; g < group_count; ++g) {
                if (size[g] == 0) continue;
                double* gm = group_mean_unit.row(g);
                for (int k = 0; k < dim; ++k) gm[k] /= size[g];
            }
        }
        for (int i = 0; i < n; ++i) {
            const double* u = unit.row(i);
            const double* gm = group_mean_unit.row(group[i]);
            double* g = grad_features->row(i);
            for (int k = 0; k < dim; ++k)
                g[k] = (u[k] - (detach_centers ? 0.0 : gm[k])) / n;
        }
    }
    return loss;
}

std::vector<int> subsample_for_diversity(int batch, int m, std::uint64_t seed, std::uint64_t step) {
    if (m > batch) throw invalid_input_error("subsample_for_diversity: M exceeds batch size");
    if (m < 0) throw invalid_input_error("subsample_for_diversity: M must be >= 0");
    std::vector<int> idx(batch);
    for (int i = 0; i < batch; ++i) idx[i] = i;
    if (m == batch) return idx;
    Rng rng(derive_seed(seed, step));
    for (int i = 0; i < m; ++i) {
        const int j = i + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(batch - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    return idx;
}

void add_regularizer_terms(const ForwardCache& cache, std::span<const double> y,
                           const RegularizerConfig& cfg, std::uint64_t seed, std::uint64_t step,
                           UpstreamGrads& grads, LossBreakdown& breakdown) {
    cfg.validate();
    const int batch = cache.features.rows();
    const int hidden = cache.features.cols();
    if (static_cast<int>(y.size()) != batch)
        throw invalid_input_error("add_regularizer_terms: label count mismatch");

    const Matrix& reg_input = cfg.normalize_features ? cache.normalized : cache.features;
    Matrix& reg_grad = cfg.normalize_features ? grads.d_normalized : grads.d_features;

    if (cfg.lambda_d > 0.0 && batch >= 2) {
        const int m = cfg.sample_size_m == 0 ? batch : std::min(cfg.sample_size_m, batch);
        if (m >= 2) {
            const std::vector<int> idx = subsample_for_diversity(batch, m, seed, step);
            Matrix sub(m, hidden);
            std::vector<double> sub_y(m);
            for (int i = 0; i < m; ++i) {
                std::copy(reg_input.row(idx[i]), reg_input.row(idx[i]) + hidden, sub.row(i));
                sub_y[i] = y[idx[i]];
            }
            Matrix sub_grad;
            breakdown.diversity = diversity_loss(sub, sub_y, cfg.weight_fn, cfg.feature_distance, &sub_grad);
            if (reg_grad.empty()) reg_grad = Matrix(batch, hidden);
            for (int i = 0; i < m; ++i) {
                double* dst = reg_grad.row(idx[i]);
                const double* src = sub_grad.row(i);
                for (int k = 0; k < hidden; ++k) dst[k] += cfg.lambda_d * src[k];
            }
        }
    }

    if (cfg.lambda_t > 0.0) {
        Matrix tight_grad;
        breakdown.tightness =
            tightness_loss(reg_input, y, cfg.label_bins_for_centers, cfg.detach_centers, &tight_grad);
        if (reg_grad.empty()) reg_grad = Matrix(batch, hidden);
        for (int i = 0; i < batch; ++i) {
            double* dst = reg_grad.row(i);
            const double* src = tight_grad.row(i);
            for (int k = 0; k < hidden; ++k) dst[k] += cfg.lambda_t * src[k];
        }
    }
}

TotalLossResult total_loss(const ForwardCache& cache, std::span<const double> y,
                           const RegularizerConfig& cfg, std::uint64_t seed, std::uint64_t step) {
    cfg.validate();
    const int batch = cache.features.rows();
    if (cache.predictions.cols() != 1) throw invalid_input_error("total_loss: regression head must be 1-d");
    if (static_cast<int>(y.size()) != batch) throw invalid_input_error("total_loss: label count mismatch");

    TotalLossResult res;
    res.grads.d_predictions = Matrix(batch, 1);
    std::span<const double> yhat{cache.predictions.data().data(), static_cast<std::size_t>(batch)};
    std::span<double> gy{res.grads.d_predictions.data().data(), static_cast<std::size_t>(batch)};
    res.breakdown.task_loss = mse_loss(yhat, y, gy);

    add_regularizer_terms(cache, y, cfg, seed, step, res.grads, res.breakdown);

    res.breakdown.total = res.breakdown.task_loss + cfg.lambda_d * res.breakdown.diversity +
                          cfg.lambda_t * res.breakdown.tightness;
    return res;
}

} // namespace ordent
