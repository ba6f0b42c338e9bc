// End-to-end acceptance suite for the synthetic experiments. Each criterion
// prints one [PASS]/[FAIL] line; the exit code is the number of failures.
//
// Usage: acceptance [--seeds N] [--sweep-seeds N] [--threads N] [--epochs N]
// The defaults are the real gate; the flags exist for faster local runs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ordent/datagen.hpp"
#include "ordent/discretization_bound.hpp"
#include "ordent/entropy.hpp"
#include "ordent/harness.hpp"
#include "ordent/objectives.hpp"
#include "testutil.hpp"

using namespace ordent;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

struct Options {
    int seeds = 10;        // table-1 style cells (criteria 1 and 2)
    int sweep_seeds = 5;   // sweeps and entropy curves (criteria 6-8)
    int threads = 1;
    int epochs = 0;        // 0 = TrainConfig default
};

TrainConfig cell_config(Task task, const Options& o, int seeds) {
    TrainConfig cfg;
    cfg.task = task;
    cfg.seeds = make_seeds(1, seeds);
    if (o.epochs > 0) cfg.epochs = o.epochs;
    return cfg;
}

TrainConfig diversity_config(Task task, const Options& o, int seeds, WeightFn w = WeightFn::l2) {
    TrainConfig cfg = cell_config(task, o, seeds);
    cfg.regularizer.lambda_d = 1e-3;
    cfg.regularizer.weight_fn = w;
    return cfg;
}

// --- criteria 1, 6, 7, 8 share the linear datasets ---

void criterion_1(const Options& o, const Dataset& train, const Dataset& test,
                 double& baseline_mean_out) {
    const auto t0 = std::chrono::steady_clock::now();
    const MultiSeedSummary base = multi_seed(cell_config(Task::linear, o, o.seeds), train, test,
                                             0, o.threads, "baseline");
    const MultiSeedSummary unweighted = multi_seed(diversity_config(Task::linear, o, o.seeds, WeightFn::constant_one),
                                                   train, test, 0, o.threads, "plus_unweighted_diversity");
    const MultiSeedSummary weighted = multi_seed(diversity_config(Task::linear, o, o.seeds), train, test,
                                                 0, o.threads, "plus_diversity");
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    baseline_mean_out = base.mean_mse;

    const bool in_window = base.mean_mse >= 1.5e-3 && base.mean_mse <= 6.0e-3;
    const bool improve = weighted.mean_mse <= 0.75 * base.mean_mse;
    const bool between = unweighted.mean_mse > weighted.mean_mse && unweighted.mean_mse < base.mean_mse;
    const bool fast = elapsed < 600.0;
    report(1, in_window && improve && between && fast,
           "linear: baseline " + fmt(base.mean_mse) + "+-" + fmt(base.std_mse) + " in [1.5e-3,6e-3] " +
               (in_window ? "yes" : "NO") + "; +L_d " + fmt(weighted.mean_mse) + "+-" + fmt(weighted.std_mse) +
               " (" + fmt(100.0 * (1.0 - weighted.mean_mse / base.mean_mse)) + "% drop, need >=25%) " +
               (improve ? "yes" : "NO") + "; +L'_d " + fmt(unweighted.mean_mse) + " between " +
               (between ? "yes" : "NO") + "; " + fmt(elapsed) + "s (<600) " + (fast ? "yes" : "NO"));
}

void criterion_2(const Options& o) {
    const Dataset train = gen_nonlinear_dataset(1000, 100, 1.0, 101, 101, 1, o.threads);
    const Dataset test = gen_nonlinear_dataset(10000, 100, 1.0, 202, 101, 1, o.threads);
    const MultiSeedSummary base = multi_seed(cell_config(Task::nonlinear, o, o.seeds), train, test,
                                             0, o.threads, "baseline");
    const MultiSeedSummary weighted = multi_seed(diversity_config(Task::nonlinear, o, o.seeds), train, test,
                                                 0, o.threads, "plus_diversity");
    const bool improve = weighted.mean_mse <= 0.5 * base.mean_mse;
    const bool tighter = weighted.std_mse < base.std_mse;
    report(2, improve && tighter,
           "nonlinear: baseline " + fmt(base.mean_mse) + "+-" + fmt(base.std_mse) + ", +L_d " +
               fmt(weighted.mean_mse) + "+-" + fmt(weighted.std_mse) + " (" +
               fmt(100.0 * (1.0 - weighted.mean_mse / base.mean_mse)) + "% drop, need >=50%) " +
               (improve ? "yes" : "NO") + "; std reduced " + (tighter ? "yes" : "NO"));
}

void criterion_3() {
    const FuzzSummary s = run_bound_fuzz(10000, 2026, 1e-3);
    const bool all_hold = s.holds == s.total && s.worst_slack <= 1e-12;
    const bool eta_ok = s.max_lhs_after_eta < s.epsilon;
    report(3, all_hold && eta_ok,
           "discretization bound: " + std::to_string(s.holds) + "/" + std::to_string(s.total) +
               " hold, worst slack " + fmt(s.worst_slack) + "; eta re-check max gap " +
               fmt(s.max_lhs_after_eta) + " < " + fmt(s.epsilon) + " " + (eta_ok ? "yes" : "NO"));
}

// --- criterion 4: finite-difference oracle over every loss ---

std::vector<double> flatten(const Matrix& m) { return m.data(); }

Matrix unflatten(int rows, int cols, const std::vector<double>& v) {
    Matrix m(rows, cols);
    m.data() = v;
    return m;
}

void criterion_4() {
    double worst = 0.0;
    std::string worst_site = "none";
    auto track = [&](const char* site, double err) {
        if (err > worst) {
            worst = err;
            worst_site = site;
        }
    };

    {  // MSE
        Rng rng(401);
        for (int t = 0; t < 20; ++t) {
            const int n = 1 + static_cast<int>(rng.uniform_below(8));
            const auto y = testutil::random_vector(n, rng);
            const auto yhat = testutil::random_vector(n, rng);
            std::vector<double> grad(n);
            mse_loss(yhat, y, grad);
            track("mse", testutil::max_grad_err(
                             [&](const std::vector<double>& v) { return mse_loss(v, y); }, yhat, grad));
        }
    }
    {  // cross entropy
        Rng rng(402);
        for (int t = 0; t < 20; ++t) {
            const int n = 1 + static_cast<int>(rng.uniform_below(5));
            const int k = 2 + static_cast<int>(rng.uniform_below(6));
            const Matrix logits = testutil::random_matrix(n, k, rng);
            std::vector<int> classes(n);
            for (int& c : classes) c = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(k)));
            Matrix grad;
            cross_entropy_loss(logits, classes, &grad);
            track("cross_entropy",
                  testutil::max_grad_err(
                      [&](const std::vector<double>& v) { return cross_entropy_loss(unflatten(n, k, v), classes); },
                      flatten(logits), flatten(grad)));
        }
    }
    {  // diversity, every weight and distance variant (constant_one = unweighted)
        Rng rng(403);
        for (WeightFn w : {WeightFn::l2, WeightFn::squared_l2, WeightFn::sqrt_l2, WeightFn::constant_one}) {
            for (FeatureDistance dist : {FeatureDistance::l2, FeatureDistance::cosine}) {
                for (int t = 0; t < 20; ++t) {
                    const int m = 2 + static_cast<int>(rng.uniform_below(6));
                    const int dim = 1 + static_cast<int>(rng.uniform_below(4));
                    const Matrix f = testutil::random_matrix(m, dim, rng);
                    const auto y = testutil::random_vector(m, rng);
                    Matrix grad;
                    diversity_loss(f, y, w, dist, &grad);
                    track("diversity",
                          testutil::max_grad_err(
                              [&](const std::vector<double>& v) {
                                  return diversity_loss(unflatten(m, dim, v), y, w, dist);
                              },
                              flatten(f), flatten(grad)));
                }
            }
        }
    }
    {  // tightness
        Rng rng(404);
        for (int t = 0; t < 20; ++t) {
            const int n = 2 + static_cast<int>(rng.uniform_below(8));
            const int dim = 1 + static_cast<int>(rng.uniform_below(4));
            const Matrix f = testutil::random_matrix(n, dim, rng);
            const auto y = testutil::random_vector(n, rng);
            const int bins = 1 + static_cast<int>(rng.uniform_below(4));
            Matrix grad;
            tightness_loss(f, y, bins, false, &grad);
            track("tightness",
                  testutil::max_grad_err(
                      [&](const std::vector<double>& v) { return tightness_loss(unflatten(n, dim, v), y, bins); },
                      flatten(f), flatten(grad)));
        }
    }
    {  // total objective through the network parameters (normalization path included)
        Rng rng(405);
        for (int t = 0; t < 20; ++t) {
            const int in = 2 + static_cast<int>(rng.uniform_below(3));
            const int hidden = 2 + static_cast<int>(rng.uniform_below(4));
            const int batch = 3 + static_cast<int>(rng.uniform_below(4));
            RegularizerConfig cfg;
            cfg.lambda_d = 0.1 + rng.uniform(0.0, 0.4);
            cfg.lambda_t = 0.1 + rng.uniform(0.0, 0.4);
            cfg.weight_fn = static_cast<WeightFn>(t % 4);
            cfg.feature_distance = t % 3 == 0 ? FeatureDistance::cosine : FeatureDistance::l2;
            cfg.normalize_features = t % 5 != 0;
            cfg.label_bins_for_centers = 1 + static_cast<int>(rng.uniform_below(4));
            const MlpParams shape = init_params(in, hidden, 1, 900 + t);
            const Matrix x = testutil::random_matrix(batch, in, rng);
            const auto y = testutil::random_vector(batch, rng);

            const ForwardCache cache = forward(shape, x);
            const TotalLossResult res = total_loss(cache, y, cfg, 3, t);
            const Gradients g = backward(shape, cache, res.grads);

            std::vector<double> flat;
            flat.insert(flat.end(), shape.w1.data().begin(), shape.w1.data().end());
            flat.insert(flat.end(), shape.b1.begin(), shape.b1.end());
            flat.insert(flat.end(), shape.w2.data().begin(), shape.w2.data().end());
            flat.insert(flat.end(), shape.b2.begin(), shape.b2.end());
            std::vector<double> analytic;
            analytic.insert(analytic.end(), g.w1.data().begin(), g.w1.data().end());
            analytic.insert(analytic.end(), g.b1.begin(), g.b1.end());
            analytic.insert(analytic.end(), g.w2.data().begin(), g.w2.data().end());
            analytic.insert(analytic.end(), g.b2.begin(), g.b2.end());

            auto f = [&](const std::vector<double>& v) {
                MlpParams p = shape;
                std::size_t k = 0;
                for (double& w : p.w1.data()) w = v[k++];
                for (double& w : p.b1) w = v[k++];
                for (double& w : p.w2.data()) w = v[k++];
                for (double& w : p.b2) w = v[k++];
                return total_loss(forward(p, x), y, cfg, 3, t).breakdown.total;
            };
            track("total_through_network", testutil::max_grad_err(f, flat, analytic));
        }
    }
    report(4, worst < 1e-5,
           "gradient oracle: max relative error " + fmt(worst) + " at " + worst_site + " (< 1e-5)");
}

void criterion_5() {
    Rng rng(501);
    double worst_oracle = 0.0, worst_translation = 0.0, worst_dilation = 0.0;
    for (int t = 0; t < 40; ++t) {
        const int n = 2 + static_cast<int>(rng.uniform_below(63));
        const int d = 1 + static_cast<int>(rng.uniform_below(8));
        const Matrix z = testutil::random_matrix(n, d, rng);
        const double est = mean_nn_entropy(z).value;

        double brute = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                double d2 = 0.0;
                for (int k = 0; k < d; ++k) d2 += (z(i, k) - z(j, k)) * (z(i, k) - z(j, k));
                brute += std::log(d2 + 1e-12);
            }
        brute *= static_cast<double>(d) / (static_cast<double>(n) * (n - 1));
        worst_oracle = std::max(worst_oracle, std::abs(est - brute) / std::max(1.0, std::abs(brute)));

        Matrix shifted = z;
        const auto offset = testutil::random_vector(d, rng, 5.0);
        for (int r = 0; r < n; ++r)
            for (int k = 0; k < d; ++k) shifted(r, k) += offset[k];
        worst_translation = std::max(worst_translation, std::abs(mean_nn_entropy(shifted).value - est));

        const double s = 0.5 + rng.uniform() * 3.0;
        Matrix scaled = z;
        for (double& v : scaled.data()) v *= s;
        worst_dilation = std::max(
            worst_dilation, std::abs(mean_nn_entropy(scaled).value - est - 2.0 * d * std::log(s)));
    }
    const bool ok = worst_oracle <= 1e-12 && worst_translation <= 1e-10 && worst_dilation <= 1e-10;
    report(5, ok,
           "entropy estimator: oracle err " + fmt(worst_oracle) + " (<=1e-12), translation " +
               fmt(worst_translation) + " (<=1e-10), dilation " + fmt(worst_dilation) + " (<=1e-10)");
}

void criterion_6(const Options& o, const Dataset& train, const Dataset& test) {
    auto mean_trace = [&](const TrainConfig& cfg, const std::string& method) {
        const MultiSeedSummary ms = multi_seed(cfg, train, test, 0, o.threads, method);
        std::vector<double> mean(ms.runs.front().entropy_trace.entries.size(), 0.0);
        for (const auto& run : ms.runs)
            for (std::size_t e = 0; e < mean.size(); ++e)
                mean[e] += run.entropy_trace.entries[e].estimate.value / ms.runs.size();
        std::vector<int> epochs;
        for (const auto& entry : ms.runs.front().entropy_trace.entries) epochs.push_back(entry.epoch);
        return std::make_pair(epochs, mean);
    };

    TrainConfig reg = cell_config(Task::linear, o, o.sweep_seeds);
    reg.entropy_every = 1;
    TrainConfig cls = reg;
    cls.head = Head::classification;
    TrainConfig div = diversity_config(Task::linear, o, o.sweep_seeds);
    div.entropy_every = 1;

    const auto [epochs_r, trace_r] = mean_trace(reg, "regression");
    const auto [epochs_c, trace_c] = mean_trace(cls, "classification");
    const auto [epochs_d, trace_d] = mean_trace(div, "plus_diversity");

    bool gap_positive = true;
    int first_bad = -1;
    for (std::size_t e = 0; e < trace_r.size(); ++e) {
        if (epochs_r[e] <= 5) continue;
        if (!(trace_c[e] > trace_r[e])) {
            gap_positive = false;
            if (first_bad < 0) first_bad = epochs_r[e];
        }
    }
    const bool final_order = trace_d.back() >= trace_c.back() && trace_c.back() >= trace_r.back();
    report(6, gap_positive && final_order,
           "entropy curves: final diversity " + fmt(trace_d.back()) + " >= classification " +
               fmt(trace_c.back()) + " >= regression " + fmt(trace_r.back()) + " " +
               (final_order ? "yes" : "NO") + "; classification gap positive after epoch 5 " +
               (gap_positive ? "yes" : ("NO (first bad epoch " + std::to_string(first_bad) + ")")));
}

void criterion_7(const Options& o, const Dataset& train, const Dataset& test, double baseline_mean) {
    // Baseline mean at the sweep seed count for a like-for-like comparison.
    const MultiSeedSummary base = multi_seed(cell_config(Task::linear, o, o.sweep_seeds), train, test,
                                             0, o.threads, "baseline");
    const std::vector<int> sizes{2, 4, 8, 16, 32, 64};
    std::vector<double> means;
    for (int m : sizes) {
        TrainConfig cfg = diversity_config(Task::linear, o, o.sweep_seeds);
        cfg.regularizer.sample_size_m = m;
        means.push_back(multi_seed(cfg, train, test, 0, o.threads, "m" + std::to_string(m)).mean_mse);
    }
    const bool m2_below = means.front() < base.mean_mse;
    std::size_t argmin = 0;
    for (std::size_t i = 1; i < means.size(); ++i)
        if (means[i] < means[argmin]) argmin = i;
    const bool interior_min = argmin > 0 && argmin + 1 < means.size();

    std::ostringstream curve;
    for (std::size_t i = 0; i < means.size(); ++i)
        curve << (i ? " " : "") << "M" << sizes[i] << "=" << fmt(means[i]);
    report(7, m2_below && interior_min,
           "sample-size sweep: baseline(" + std::to_string(o.sweep_seeds) + " seeds) " + fmt(base.mean_mse) +
               ", " + curve.str() + "; M=2 below baseline " + (m2_below ? "yes" : "NO") +
               "; interior minimum at M" + std::to_string(sizes[argmin]) + " " +
               (interior_min ? "yes" : "NO") + " (10-seed baseline " + fmt(baseline_mean) + ")");
}

void criterion_8(const Options& o, const Dataset& train, const Dataset& test) {
    TrainConfig small = diversity_config(Task::linear, o, o.sweep_seeds);
    small.regularizer.lambda_d = 1e-3;
    TrainConfig large = small;
    large.regularizer.lambda_d = 1.0;
    const MultiSeedSummary at_small = multi_seed(small, train, test, 0, o.threads, "lambda_0.001");
    const MultiSeedSummary at_large = multi_seed(large, train, test, 0, o.threads, "lambda_1");
    const bool degrades = at_large.mean_mse > at_small.mean_mse;
    report(8, degrades,
           "lambda_d sweep: mse(1e-3) " + fmt(at_small.mean_mse) + ", mse(1) " + fmt(at_large.mean_mse) +
               "; degradation at lambda_d=1 " + (degrades ? "yes" : "NO"));
}

void criterion_9() {
    // Constant coefficient: second-order scheme is exact for the parabola.
    const Grid g = Grid::uniform(101);
    const FieldSample b0{g, std::vector<double>(101, 0.0)};
    const FieldSample u = solve_spde(b0, 10.0);
    const double mid_err = std::abs(u.values[50] - (-1.25));

    auto mms_error = [](int nodes) {
        const Grid grid = Grid::uniform(nodes);
        std::vector<double> b(grid.points.size()), f(grid.points.size());
        for (std::size_t i = 0; i < grid.points.size(); ++i) {
            const double x = grid.points[i];
            b[i] = x;
            f[i] = std::exp(x) * M_PI * std::cos(M_PI * x) -
                   std::exp(x) * M_PI * M_PI * std::sin(M_PI * x);
        }
        const FieldSample sol = solve_spde(FieldSample{grid, b}, f);
        double worst = 0.0;
        for (std::size_t i = 0; i < grid.points.size(); ++i)
            worst = std::max(worst, std::abs(sol.values[i] - std::sin(M_PI * grid.points[i])));
        return worst;
    };
    const double e1 = mms_error(65), e2 = mms_error(129), e3 = mms_error(257);
    const double rate1 = std::log2(e1 / e2), rate2 = std::log2(e2 / e3);
    const bool ok = mid_err < 1e-4 && std::abs(rate1 - 2.0) <= 0.2 && std::abs(rate2 - 2.0) <= 0.2;
    report(9, ok,
           "spde solver: |u(0.5)+1.25| = " + fmt(mid_err) + " (<1e-4); convergence rates " + fmt(rate1) +
               ", " + fmt(rate2) + " (2.0 +- 0.2)");
}

void criterion_10(const Options& o) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "ordent_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };

    // dataset files
    const Dataset d1 = gen_linear_dataset(100, 20, KernelConfig{0.2, 1.0, 0.0}, 77, 256, 1, o.threads);
    const Dataset d2 = gen_linear_dataset(100, 20, KernelConfig{0.2, 1.0, 0.0}, 77, 256, 1, 1);
    save_dataset(d1, dir / "a.csv");
    save_dataset(d2, dir / "b.csv");
    const bool data_identical = slurp(dir / "a.csv") == slurp(dir / "b.csv");

    // run result files
    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.batch_size = 16;
    cfg.hidden = 16;
    cfg.eval_every = 4;
    cfg.entropy_subset = 32;
    cfg.seeds = {5};
    const Dataset train = gen_linear_dataset(64, 20, KernelConfig{0.2, 1.0, 0.0}, 31, 256);
    const Dataset test = gen_linear_dataset(64, 20, KernelConfig{0.2, 1.0, 0.0}, 32, 256);
    const RunResult r1 = train_run(cfg, train, test, 5, "det");
    const RunResult r2 = train_run(cfg, train, test, 5, "det");
    write_run_files(r1, dir / "r1");
    write_run_files(r2, dir / "r2");
    const bool runs_identical = slurp(dir / "r1/curve_5.csv") == slurp(dir / "r2/curve_5.csv") &&
                                slurp(dir / "r1/entropy_5.csv") == slurp(dir / "r2/entropy_5.csv") &&
                                slurp(dir / "r1/meta_5.txt") == slurp(dir / "r2/meta_5.txt");
    fs::remove_all(dir);
    report(10, data_identical && runs_identical,
           std::string("determinism: dataset files byte-identical ") + (data_identical ? "yes" : "NO") +
               ", run result files byte-identical " + (runs_identical ? "yes" : "NO"));
}

} // namespace

int main(int argc, char** argv) {
    Options o;
    for (int i = 1; i < argc; ++i) {
        auto next_int = [&](int& dst) {
            if (i + 1 < argc) dst = std::atoi(argv[++i]);
        };
        if (std::strcmp(argv[i], "--seeds") == 0) next_int(o.seeds);
        else if (std::strcmp(argv[i], "--sweep-seeds") == 0) next_int(o.sweep_seeds);
        else if (std::strcmp(argv[i], "--threads") == 0) next_int(o.threads);
        else if (std::strcmp(argv[i], "--epochs") == 0) next_int(o.epochs);
        else {
            std::fprintf(stderr, "unknown flag %s\n", argv[i]);
            return 64;
        }
    }

    std::printf("acceptance: %d cell seeds, %d sweep seeds, %d threads\n", o.seeds, o.sweep_seeds, o.threads);
    const auto t0 = std::chrono::steady_clock::now();

    // Fast, training-free criteria first.
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_9();
    criterion_10(o);

    const Dataset linear_train = gen_linear_dataset(1000, 100, KernelConfig{0.2, 1.0, 0.0}, 101, 1000, 1, o.threads);
    const Dataset linear_test = gen_linear_dataset(10000, 100, KernelConfig{0.2, 1.0, 0.0}, 202, 1000, 1, o.threads);

    double baseline_mean = 0.0;
    criterion_1(o, linear_train, linear_test, baseline_mean);
    criterion_2(o);
    criterion_6(o, linear_train, linear_test);
    criterion_7(o, linear_train, linear_test, baseline_mean);
    criterion_8(o, linear_train, linear_test);

    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("acceptance finished in %.1f s with %d failure(s)\n", elapsed, g_failures);
    return g_failures;
}
