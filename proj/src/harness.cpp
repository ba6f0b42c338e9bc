#include "ordent/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "ordent/errors.hpp"
#include "ordent/rng.hpp"

namespace ordent {

namespace {

// Stream indices for the per-run seed derivation.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kSubsampleStream = 2;

// The entropy evaluation subset is shared by every run and method so the
// traces are comparable curves over the same points.
constexpr std::uint64_t kEntropySubsetSeed = 0x0e7a11;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* head_name(Head h) { return h == Head::regression ? "regression" : "classification"; }
const char* opt_name(OptimizerKind o) { return o == OptimizerKind::adam ? "adam" : "sgd"; }
const char* weight_fn_name(WeightFn w) {
    switch (w) {
        case WeightFn::l2: return "l2";
        case WeightFn::squared_l2: return "squared_l2";
        case WeightFn::sqrt_l2: return "sqrt_l2";
        case WeightFn::constant_one: return "constant_one";
    }
    return "l2";
}
const char* distance_name(FeatureDistance d) { return d == FeatureDistance::l2 ? "l2" : "cosine"; }

void adam_update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                 std::vector<double>& v, double lr, const AdamParams& ap, double bc1, double bc2) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = ap.beta1 * m[i] + (1.0 - ap.beta1) * g[i];
        v[i] = ap.beta2 * v[i] + (1.0 - ap.beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + ap.epsilon);
    }
}

void sgd_update(std::vector<double>& p, const std::vector<double>& g, double lr) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
}

// Flattened view over the four parameter tensors, so the optimizer treats
// them uniformly.
struct ParamViews {
    std::vector<std::vector<double>*> params;
    std::vector<const std::vector<double>*> grads;
};

ParamViews views(MlpParams& p, const Gradients& g) {
    return ParamViews{{&p.w1.data(), &p.b1, &p.w2.data(), &p.b2},
                      {&g.w1.data(), &g.b1, &g.w2.data(), &g.b2}};
}

Matrix design_matrix(const Dataset& d) {
    const int n = static_cast<int>(d.samples.size());
    const int m = d.meta.m;
    Matrix x(n, m + 1);
    for (int i = 0; i < n; ++i) {
        double* row = x.row(i);
        std::copy(d.samples[i].sensors.begin(), d.samples[i].sensors.end(), row);
        row[m] = d.samples[i].query;
    }
    return x;
}

std::vector<double> targets(const Dataset& d) {
    std::vector<double> y(d.samples.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = d.samples[i].target;
    return y;
}

void gather_rows(const Matrix& src, const std::vector<int>& idx, int begin, int count, Matrix& dst) {
    for (int i = 0; i < count; ++i)
        std::copy(src.row(idx[begin + i]), src.row(idx[begin + i]) + src.cols(), dst.row(i));
}

// Test MSE in chunks; classification decodes the argmax bin center.
double evaluate_mse(const MlpParams& p, const Matrix& x, const std::vector<double>& y, Head head,
                    const std::vector<double>& class_centers) {
    const int n = x.rows();
    const int chunk = 1024;
    Matrix xb;
    KahanSum acc;
    for (int start = 0; start < n; start += chunk) {
        const int count = std::min(chunk, n - start);
        xb = Matrix(count, x.cols());
        for (int i = 0; i < count; ++i) std::copy(x.row(start + i), x.row(start + i) + x.cols(), xb.row(i));
        const ForwardCache c = forward(p, xb);
        for (int i = 0; i < count; ++i) {
            double pred;
            if (head == Head::regression) {
                pred = c.predictions(i, 0);
            } else {
                const double* row = c.predictions.row(i);
                const int k = static_cast<int>(std::max_element(row, row + c.predictions.cols()) - row);
                pred = class_centers[k];
            }
            const double r = pred - y[start + i];
            acc.add(r * r);
        }
    }
    return acc.value() / n;
}

Matrix subset_features(const MlpParams& p, const Matrix& x, const std::vector<int>& idx) {
    Matrix xb(static_cast<int>(idx.size()), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy(x.row(idx[i]), x.row(idx[i]) + x.cols(), xb.row(static_cast<int>(i)));
    const ForwardCache c = forward(p, xb);
    return c.features;
}

} // namespace

const char* task_name(Task t) { return t == Task::linear ? "linear" : "nonlinear"; }

void TrainConfig::validate() const {
    if (epochs < 1) throw invalid_input_error("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw invalid_input_error("TrainConfig: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw invalid_input_error("TrainConfig: learning_rate must be positive");
    if (seeds.empty()) throw invalid_input_error("TrainConfig: seeds must be nonempty");
    if (head == Head::classification && classes < 2)
        throw invalid_input_error("TrainConfig: classification needs >= 2 classes");
    if (hidden < 1) throw invalid_input_error("TrainConfig: hidden must be >= 1");
    if (eval_every < 1) throw invalid_input_error("TrainConfig: eval_every must be >= 1");
    if (entropy_every < 0) throw invalid_input_error("TrainConfig: entropy_every must be >= 0");
    if (entropy_subset < 2) throw invalid_input_error("TrainConfig: entropy_subset must be >= 2");
    regularizer.validate();
}

RunResult train_run(const TrainConfig& cfg, const Dataset& train, const Dataset& test,
                    std::uint64_t seed, const std::string& method) {
    cfg.validate();
    const auto wanted = cfg.task == Task::linear ? DatasetKind::linear : DatasetKind::nonlinear;
    if (train.meta.kind != wanted || test.meta.kind != wanted)
        throw invalid_input_error("train_run: dataset kind does not match task");
    if (train.meta.m != test.meta.m) throw invalid_input_error("train_run: train/test sensor mismatch");
    if (train.samples.empty() || test.samples.empty()) throw invalid_input_error("train_run: empty dataset");

    const auto t_start = std::chrono::steady_clock::now();

    const Matrix x_train = design_matrix(train);
    const Matrix x_test = design_matrix(test);
    const std::vector<double> y_train = targets(train);
    const std::vector<double> y_test = targets(test);
    const int n = x_train.rows();
    const int input_dim = x_train.cols();
    const int batch_size = std::min(cfg.batch_size, n);
    const int entropy_every = cfg.entropy_every == 0 ? cfg.eval_every : cfg.entropy_every;

    // Classification: uniform bins over the observed training target range.
    std::vector<int> train_classes;
    std::vector<double> class_centers;
    if (cfg.head == Head::classification) {
        auto [lo_it, hi_it] = std::minmax_element(y_train.begin(), y_train.end());
        double lo = *lo_it, hi = *hi_it;
        if (!(hi > lo)) hi = lo + 1.0;
        const Discretized d = discretize_targets(y_train, cfg.classes, lo, hi);
        train_classes = d.indices;
        class_centers.resize(cfg.classes);
        for (int k = 0; k < cfg.classes; ++k) class_centers[k] = lo + (k + 0.5) * d.bin_width;
    }

    const int output_dim = cfg.head == Head::regression ? 1 : cfg.classes;
    MlpParams params = init_params(input_dim, cfg.hidden, output_dim, derive_seed(seed, kInitStream),
                                   cfg.activation);

    std::vector<std::vector<double>> adam_ms(4), adam_vs(4);
    {
        Gradients dummy{Matrix(cfg.hidden, input_dim), std::vector<double>(cfg.hidden),
                        Matrix(output_dim, cfg.hidden), std::vector<double>(output_dim)};
        const ParamViews pv = views(params, dummy);
        for (int i = 0; i < 4; ++i) {
            adam_ms[i].assign(pv.params[i]->size(), 0.0);
            adam_vs[i].assign(pv.params[i]->size(), 0.0);
        }
    }
    long long adam_t = 0;

    const int test_n = x_test.rows();
    std::vector<int> entropy_idx =
        subsample_for_diversity(test_n, std::min(cfg.entropy_subset, test_n), kEntropySubsetSeed, 0);

    RunResult result;
    result.seed = seed;
    result.entropy_trace.split = "test";
    result.entropy_trace.method = method.empty() ? "run" : method;
    result.config_echo = serialize_config(cfg);
    result.final_test_mse = std::numeric_limits<double>::quiet_NaN();
    result.final_entropy = std::numeric_limits<double>::quiet_NaN();

    Rng shuffle_rng(derive_seed(seed, kShuffleStream));
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;

    Matrix xb(batch_size, input_dim);
    std::vector<double> yb(batch_size);
    std::vector<int> cb(batch_size);
    std::uint64_t step = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.uniform_below(static_cast<std::uint64_t>(i) + 1));
            std::swap(perm[i], perm[j]);
        }

        KahanSum ep_total, ep_task, ep_div, ep_tight;
        long long batches = 0;
        for (int start = 0; start < n; start += batch_size) {
            const int count = std::min(batch_size, n - start);
            if (count != xb.rows()) {
                xb = Matrix(count, input_dim);
                yb.resize(count);
                cb.resize(count);
            }
            gather_rows(x_train, perm, start, count, xb);
            for (int i = 0; i < count; ++i) yb[i] = y_train[perm[start + i]];

            const ForwardCache cache = forward(params, xb);
            LossBreakdown breakdown;
            UpstreamGrads upstream;
            if (cfg.head == Head::regression) {
                TotalLossResult res = total_loss(cache, yb, cfg.regularizer,
                                                 derive_seed(seed, kSubsampleStream), step);
                breakdown = res.breakdown;
                upstream = std::move(res.grads);
            } else {
                for (int i = 0; i < count; ++i) cb[i] = train_classes[perm[start + i]];
                Matrix grad_logits;
                breakdown.task_loss = cross_entropy_loss(cache.predictions, cb, &grad_logits);
                upstream.d_predictions = std::move(grad_logits);
                add_regularizer_terms(cache, yb, cfg.regularizer, derive_seed(seed, kSubsampleStream),
                                      step, upstream, breakdown);
                breakdown.total = breakdown.task_loss + cfg.regularizer.lambda_d * breakdown.diversity +
                                  cfg.regularizer.lambda_t * breakdown.tightness;
            }
            ++step;

            if (!std::isfinite(breakdown.total)) {
                result.diverged = true;
                result.note = "non-finite loss at epoch " + std::to_string(epoch);
                const auto t_end = std::chrono::steady_clock::now();
                result.wall_time_s = std::chrono::duration<double>(t_end - t_start).count();
                return result;
            }

            const double lr = cfg.lr_schedule == LrSchedule::cosine
                                  ? cfg.learning_rate * 0.5 *
                                        (1.0 + std::cos(M_PI * (epoch - 1) / static_cast<double>(cfg.epochs)))
                                  : cfg.learning_rate;
            const Gradients grads = backward(params, cache, upstream);
            const ParamViews pv = views(params, grads);
            if (cfg.optimizer == OptimizerKind::adam) {
                ++adam_t;
                const double bc1 = 1.0 - std::pow(cfg.adam.beta1, static_cast<double>(adam_t));
                const double bc2 = 1.0 - std::pow(cfg.adam.beta2, static_cast<double>(adam_t));
                for (int i = 0; i < 4; ++i)
                    adam_update(*pv.params[i], *pv.grads[i], adam_ms[i], adam_vs[i], lr, cfg.adam, bc1, bc2);
            } else {
                for (int i = 0; i < 4; ++i) sgd_update(*pv.params[i], *pv.grads[i], lr);
            }

            ep_total.add(breakdown.total * count);
            ep_task.add(breakdown.task_loss * count);
            ep_div.add(breakdown.diversity * count);
            ep_tight.add(breakdown.tightness * count);
            ++batches;
        }
        (void)batches;

        EpochStats stats;
        stats.epoch = epoch;
        stats.total = ep_total.value() / n;
        stats.task = ep_task.value() / n;
        stats.diversity = ep_div.value() / n;
        stats.tightness = ep_tight.value() / n;
        if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
            stats.test_mse = evaluate_mse(params, x_test, y_test, cfg.head, class_centers);
            stats.evaluated = true;
            result.final_test_mse = stats.test_mse;
        }
        if (epoch % entropy_every == 0 || epoch == cfg.epochs) {
            const Matrix feats = subset_features(params, x_test, entropy_idx);
            result.entropy_trace.update(epoch, feats);
            result.final_entropy = result.entropy_trace.entries.back().estimate.value;
        }
        result.curve.push_back(stats);
    }

    const auto t_end = std::chrono::steady_clock::now();
    result.wall_time_s = std::chrono::duration<double>(t_end - t_start).count();
    return result;
}

void write_run_files(const RunResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string tag = std::to_string(r.seed);
    {
        std::ofstream out(dir / ("curve_" + tag + ".csv"));
        if (!out) throw data_error(data_error::kind::io_failure, "write_run_files: cannot open curve file");
        out << "epoch,total_loss,task_loss,diversity,tightness,test_mse\n";
        for (const auto& s : r.curve) {
            out << s.epoch << ',' << fmt17(s.total) << ',' << fmt17(s.task) << ',' << fmt17(s.diversity)
                << ',' << fmt17(s.tightness) << ',' << (s.evaluated ? fmt17(s.test_mse) : "") << '\n';
        }
    }
    {
        std::ofstream out(dir / ("entropy_" + tag + ".csv"));
        if (!out) throw data_error(data_error::kind::io_failure, "write_run_files: cannot open trace file");
        write_trace_csv(out, {r.entropy_trace});
    }
    {
        std::ofstream out(dir / ("meta_" + tag + ".txt"));
        if (!out) throw data_error(data_error::kind::io_failure, "write_run_files: cannot open meta file");
        out << "seed " << r.seed << "\n"
            << "diverged " << (r.diverged ? 1 : 0) << "\n"
            << "final_test_mse " << fmt17(r.final_test_mse) << "\n"
            << "final_entropy " << fmt17(r.final_entropy) << "\n";
        if (!r.note.empty()) out << "note " << r.note << "\n";
        out << "--- config ---\n" << r.config_echo;
    }
}

std::vector<std::uint64_t> make_seeds(std::uint64_t master, int k) {
    std::vector<std::uint64_t> seeds(k);
    for (int i = 0; i < k; ++i) seeds[i] = derive_seed(master, 0x5eed0000ull + static_cast<std::uint64_t>(i));
    return seeds;
}

MultiSeedSummary multi_seed(const TrainConfig& cfg, const Dataset& train, const Dataset& test,
                            int k_runs, int threads, const std::string& method) {
    cfg.validate();
    const int k = k_runs == 0 ? static_cast<int>(cfg.seeds.size())
                              : std::min<int>(k_runs, static_cast<int>(cfg.seeds.size()));
    if (k < 1) throw invalid_input_error("multi_seed: need at least one seed");

    MultiSeedSummary summary;
    summary.runs.resize(k);
    threads = std::max(1, std::min(threads, k));
    if (threads == 1) {
        for (int i = 0; i < k; ++i) summary.runs[i] = train_run(cfg, train, test, cfg.seeds[i], method);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < k; i = next.fetch_add(1))
                    summary.runs[i] = train_run(cfg, train, test, cfg.seeds[i], method);
            });
        }
        for (auto& th : pool) th.join();
    }

    // Aggregate over the seed set; sorting makes it order-independent.
    std::vector<double> mses;
    mses.reserve(k);
    for (const auto& r : summary.runs) mses.push_back(r.final_test_mse);
    std::sort(mses.begin(), mses.end());
    KahanSum sum;
    for (double v : mses) sum.add(v);
    summary.mean_mse = sum.value() / k;
    if (k > 1) {
        KahanSum sq;
        for (double v : mses) sq.add((v - summary.mean_mse) * (v - summary.mean_mse));
        summary.std_mse = std::sqrt(sq.value() / (k - 1));
    }
    return summary;
}

namespace {

struct SuiteCell {
    std::string config_id;
    TrainConfig cfg;
};

TrainConfig base_config(Task task, const SuiteOptions& opts) {
    TrainConfig cfg;
    cfg.task = task;
    cfg.seeds = make_seeds(opts.master_seed, opts.seeds);
    if (opts.epochs > 0) cfg.epochs = opts.epochs;
    return cfg;
}

TrainConfig with_diversity(TrainConfig cfg, double lambda_d, WeightFn w = WeightFn::l2,
                           FeatureDistance dist = FeatureDistance::l2, bool normalize = true) {
    cfg.regularizer.lambda_d = lambda_d;
    cfg.regularizer.weight_fn = w;
    cfg.regularizer.feature_distance = dist;
    cfg.regularizer.normalize_features = normalize;
    return cfg;
}

std::vector<SuiteCell> table1_cells(Task task, const SuiteOptions& opts) {
    const TrainConfig base = base_config(task, opts);
    return {
        {"baseline", base},
        {"plus_unweighted_diversity", with_diversity(base, 1e-3, WeightFn::constant_one)},
        {"plus_diversity", with_diversity(base, 1e-3)},
        {"cosine_distance", with_diversity(base, 1e-3, WeightFn::l2, FeatureDistance::cosine)},
        {"no_normalization", with_diversity(base, 1e-3, WeightFn::l2, FeatureDistance::l2, false)},
        {"weight_squared_l2", with_diversity(base, 1e-3, WeightFn::squared_l2)},
        {"weight_sqrt_l2", with_diversity(base, 1e-3, WeightFn::sqrt_l2)},
    };
}

std::vector<SuiteCell> sweep_m_cells(const SuiteOptions& opts) {
    std::vector<SuiteCell> cells{{"baseline", base_config(Task::linear, opts)}};
    for (int m : {2, 4, 8, 16, 32, 64}) {
        TrainConfig cfg = with_diversity(base_config(Task::linear, opts), 1e-3);
        cfg.regularizer.sample_size_m = m;
        cells.push_back({"m" + std::to_string(m), cfg});
    }
    TrainConfig cfg = with_diversity(base_config(Task::linear, opts), 1e-3);
    cfg.regularizer.sample_size_m = 0;
    cells.push_back({"mfull", cfg});
    return cells;
}

std::vector<SuiteCell> sweep_lambda_cells(const SuiteOptions& opts) {
    std::vector<SuiteCell> cells;
    for (double l : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
        char id[32];
        std::snprintf(id, sizeof id, "lambda_%g", l);
        cells.push_back({id, with_diversity(base_config(Task::linear, opts), l)});
    }
    return cells;
}

std::vector<SuiteCell> entropy_curve_cells(const SuiteOptions& opts) {
    TrainConfig base = base_config(Task::linear, opts);
    base.entropy_every = 1;
    TrainConfig classification = base;
    classification.head = Head::classification;
    TrainConfig with_tightness = with_diversity(base, 1e-3);
    with_tightness.regularizer.lambda_t = 1e-3;
    return {
        {"regression", base},
        {"classification", classification},
        {"plus_unweighted_diversity", with_diversity(base, 1e-3, WeightFn::constant_one)},
        {"plus_diversity", with_diversity(base, 1e-3)},
        {"plus_diversity_tightness", with_tightness},
    };
}

Dataset make_task_dataset(Task task, std::uint64_t seed, int n, int m, int threads) {
    if (task == Task::linear) return gen_linear_dataset(n, m, KernelConfig{0.2, 1.0, 0.0}, seed, 1000, 1, threads);
    return gen_nonlinear_dataset(n, m, 1.0, seed, 101, 1, threads);
}

} // namespace

std::vector<CellResult> ablation_suite(const std::string& name, const std::filesystem::path& out_dir,
                                       const SuiteOptions& opts) {
    std::vector<std::pair<Task, std::vector<SuiteCell>>> plan;
    if (name == "table1") {
        plan.emplace_back(Task::linear, table1_cells(Task::linear, opts));
        plan.emplace_back(Task::nonlinear, table1_cells(Task::nonlinear, opts));
    } else if (name == "sweep_M") {
        plan.emplace_back(Task::linear, sweep_m_cells(opts));
    } else if (name == "sweep_lambda_d") {
        plan.emplace_back(Task::linear, sweep_lambda_cells(opts));
    } else if (name == "entropy_curves") {
        plan.emplace_back(Task::linear, entropy_curve_cells(opts));
    } else {
        throw invalid_input_error("ablation_suite: unknown suite '" + name + "'");
    }

    std::filesystem::create_directories(out_dir);
    std::ofstream results(out_dir / "results.csv");
    std::ofstream summary(out_dir / "summary.csv");
    if (!results || !summary)
        throw data_error(data_error::kind::io_failure, "ablation_suite: cannot open output CSVs");
    results << "suite,task,config_id,seed,test_mse,entropy_final,wall_time_s\n";
    summary << "suite,task,config_id,runs,mean_mse,std_mse\n";

    std::vector<CellResult> out;
    std::vector<EntropyTrace> mean_traces;
    for (const auto& [task, cells] : plan) {
        const int test_n = (task == Task::linear && opts.full_test) ? 100000 : opts.test_n;
        const Dataset train = make_task_dataset(task, opts.train_data_seed, opts.train_n, opts.m, opts.threads);
        const Dataset test = make_task_dataset(task, opts.test_data_seed, test_n, opts.m, opts.threads);
        for (const auto& cell : cells) {
            const MultiSeedSummary ms = multi_seed(cell.cfg, train, test, 0, opts.threads, cell.config_id);
            for (const auto& run : ms.runs) {
                results << name << ',' << task_name(task) << ',' << cell.config_id << ',' << run.seed
                        << ',' << fmt17(run.final_test_mse) << ',' << fmt17(run.final_entropy) << ','
                        << fmt17(run.wall_time_s) << '\n';
            }
            summary << name << ',' << task_name(task) << ',' << cell.config_id << ','
                    << ms.runs.size() << ',' << fmt17(ms.mean_mse) << ',' << fmt17(ms.std_mse) << '\n';
            if (!opts.quiet) {
                std::fprintf(stderr, "[%s/%s] %-28s mean_mse=%.6g std=%.6g\n", name.c_str(),
                             task_name(task), cell.config_id.c_str(), ms.mean_mse, ms.std_mse);
            }
            if (name == "entropy_curves") {
                // Mean entropy over seeds per evaluated epoch.
                EntropyTrace mean_trace;
                mean_trace.split = "test";
                mean_trace.method = cell.config_id;
                const auto& first = ms.runs.front().entropy_trace.entries;
                for (std::size_t e = 0; e < first.size(); ++e) {
                    EntropyTrace::Entry entry = first[e];
                    KahanSum s;
                    for (const auto& run : ms.runs) s.add(run.entropy_trace.entries[e].estimate.value);
                    entry.estimate.value = s.value() / static_cast<double>(ms.runs.size());
                    mean_trace.entries.push_back(entry);
                }
                mean_traces.push_back(std::move(mean_trace));
            }
            out.push_back(CellResult{cell.config_id, task, ms});
        }
    }
    if (!mean_traces.empty()) {
        std::ofstream traces(out_dir / "traces.csv");
        if (!traces) throw data_error(data_error::kind::io_failure, "ablation_suite: cannot open traces.csv");
        write_trace_csv(traces, mean_traces);
    }
    return out;
}

// --- config file I/O -------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw data_error(data_error::kind::malformed_file, "config: bad boolean '" + v + "'");
}

double parse_num(const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || v.empty())
        throw data_error(data_error::kind::malformed_file, "config: bad number '" + v + "'");
    return x;
}

} // namespace

TrainConfig parse_config(std::istream& in) {
    TrainConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        // `key value` with an optional '=' separator.
        std::string key, value;
        const auto sp = line.find_first_of(" \t=");
        if (sp == std::string::npos)
            throw data_error(data_error::kind::malformed_file,
                             "config line " + std::to_string(lineno) + ": missing value");
        key = line.substr(0, sp);
        value = trim(line.substr(sp + 1));
        if (!value.empty() && value.front() == '=') value = trim(value.substr(1));
        if (value.empty())
            throw data_error(data_error::kind::malformed_file,
                             "config line " + std::to_string(lineno) + ": missing value");

        if (key == "version") {
            if (value != "1")
                throw data_error(data_error::kind::version_mismatch, "config: unsupported version " + value);
        } else if (key == "task") {
            if (value == "linear") cfg.task = Task::linear;
            else if (value == "nonlinear") cfg.task = Task::nonlinear;
            else throw data_error(data_error::kind::malformed_file, "config: unknown task " + value);
        } else if (key == "epochs") cfg.epochs = static_cast<int>(parse_num(value));
        else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_num(value));
        else if (key == "learning_rate") cfg.learning_rate = parse_num(value);
        else if (key == "lr_schedule") {
            if (value == "constant") cfg.lr_schedule = LrSchedule::constant;
            else if (value == "cosine") cfg.lr_schedule = LrSchedule::cosine;
            else throw data_error(data_error::kind::malformed_file, "config: unknown lr_schedule " + value);
        } else if (key == "optimizer") {
            if (value == "adam") cfg.optimizer = OptimizerKind::adam;
            else if (value == "sgd") cfg.optimizer = OptimizerKind::sgd;
            else throw data_error(data_error::kind::malformed_file, "config: unknown optimizer " + value);
        } else if (key == "adam.beta1") cfg.adam.beta1 = parse_num(value);
        else if (key == "adam.beta2") cfg.adam.beta2 = parse_num(value);
        else if (key == "adam.epsilon") cfg.adam.epsilon = parse_num(value);
        else if (key == "head") {
            if (value == "regression") cfg.head = Head::regression;
            else if (value == "classification") cfg.head = Head::classification;
            else throw data_error(data_error::kind::malformed_file, "config: unknown head " + value);
        } else if (key == "classes") cfg.classes = static_cast<int>(parse_num(value));
        else if (key == "hidden") cfg.hidden = static_cast<int>(parse_num(value));
        else if (key == "activation") {
            if (value == "relu") cfg.activation = Activation::relu;
            else if (value == "tanh") cfg.activation = Activation::tanh;
            else throw data_error(data_error::kind::malformed_file, "config: unknown activation " + value);
        } else if (key == "eval_every") cfg.eval_every = static_cast<int>(parse_num(value));
        else if (key == "entropy_every") cfg.entropy_every = static_cast<int>(parse_num(value));
        else if (key == "entropy_subset") cfg.entropy_subset = static_cast<int>(parse_num(value));
        else if (key == "seeds") {
            cfg.seeds.clear();
            std::stringstream ss(value);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                tok = trim(tok);
                if (tok.empty()) continue;
                cfg.seeds.push_back(static_cast<std::uint64_t>(std::strtoull(tok.c_str(), nullptr, 10)));
            }
            if (cfg.seeds.empty())
                throw data_error(data_error::kind::malformed_file, "config: empty seed list");
        } else if (key == "regularizer.lambda_d") cfg.regularizer.lambda_d = parse_num(value);
        else if (key == "regularizer.lambda_t") cfg.regularizer.lambda_t = parse_num(value);
        else if (key == "regularizer.sample_size_m") cfg.regularizer.sample_size_m = static_cast<int>(parse_num(value));
        else if (key == "regularizer.weight_fn") {
            if (value == "l2") cfg.regularizer.weight_fn = WeightFn::l2;
            else if (value == "squared_l2") cfg.regularizer.weight_fn = WeightFn::squared_l2;
            else if (value == "sqrt_l2") cfg.regularizer.weight_fn = WeightFn::sqrt_l2;
            else if (value == "constant_one") cfg.regularizer.weight_fn = WeightFn::constant_one;
            else throw data_error(data_error::kind::malformed_file, "config: unknown weight_fn " + value);
        } else if (key == "regularizer.feature_distance") {
            if (value == "l2") cfg.regularizer.feature_distance = FeatureDistance::l2;
            else if (value == "cosine") cfg.regularizer.feature_distance = FeatureDistance::cosine;
            else throw data_error(data_error::kind::malformed_file, "config: unknown feature_distance " + value);
        } else if (key == "regularizer.normalize_features") cfg.regularizer.normalize_features = parse_bool(value);
        else if (key == "regularizer.label_bins_for_centers")
            cfg.regularizer.label_bins_for_centers = static_cast<int>(parse_num(value));
        else if (key == "regularizer.detach_centers") cfg.regularizer.detach_centers = parse_bool(value);
        else throw data_error(data_error::kind::malformed_file, "config: unknown key '" + key + "'");
    }
    return cfg;
}

TrainConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error(data_error::kind::io_failure, "parse_config_file: cannot open " + path.string());
    return parse_config(in);
}

std::string serialize_config(const TrainConfig& cfg) {
    std::ostringstream out;
    out << "version 1\n";
    out << "task " << task_name(cfg.task) << "\n";
    out << "epochs " << cfg.epochs << "\n";
    out << "batch_size " << cfg.batch_size << "\n";
    out << "learning_rate " << fmt17(cfg.learning_rate) << "\n";
    out << "lr_schedule " << (cfg.lr_schedule == LrSchedule::cosine ? "cosine" : "constant") << "\n";
    out << "optimizer " << opt_name(cfg.optimizer) << "\n";
    out << "adam.beta1 " << fmt17(cfg.adam.beta1) << "\n";
    out << "adam.beta2 " << fmt17(cfg.adam.beta2) << "\n";
    out << "adam.epsilon " << fmt17(cfg.adam.epsilon) << "\n";
    out << "head " << head_name(cfg.head) << "\n";
    out << "classes " << cfg.classes << "\n";
    out << "hidden " << cfg.hidden << "\n";
    out << "activation " << (cfg.activation == Activation::relu ? "relu" : "tanh") << "\n";
    out << "eval_every " << cfg.eval_every << "\n";
    out << "entropy_every " << cfg.entropy_every << "\n";
    out << "entropy_subset " << cfg.entropy_subset << "\n";
    out << "seeds ";
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) out << (i ? "," : "") << cfg.seeds[i];
    out << "\n";
    out << "regularizer.lambda_d " << fmt17(cfg.regularizer.lambda_d) << "\n";
    out << "regularizer.lambda_t " << fmt17(cfg.regularizer.lambda_t) << "\n";
    out << "regularizer.sample_size_m " << cfg.regularizer.sample_size_m << "\n";
    out << "regularizer.weight_fn " << weight_fn_name(cfg.regularizer.weight_fn) << "\n";
    out << "regularizer.feature_distance " << distance_name(cfg.regularizer.feature_distance) << "\n";
    out << "regularizer.normalize_features " << (cfg.regularizer.normalize_features ? "true" : "false") << "\n";
    out << "regularizer.label_bins_for_centers " << cfg.regularizer.label_bins_for_centers << "\n";
    out << "regularizer.detach_centers " << (cfg.regularizer.detach_centers ? "true" : "false") << "\n";
    return out.str();
}

} // namespace ordent
