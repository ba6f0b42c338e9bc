#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ordent/datagen.hpp"
#include "ordent/entropy.hpp"
#include "ordent/network.hpp"
#include "ordent/objectives.hpp"

namespace ordent {

enum class Task { linear, nonlinear };
enum class Head { regression, classification };
enum class OptimizerKind { sgd, adam };
enum class LrSchedule { constant, cosine };

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig {
    Task task = Task::linear;
    int epochs = 300;
    int batch_size = 64;
    double learning_rate = 1e-3;
    LrSchedule lr_schedule = LrSchedule::cosine;  // cosine decay to 0 over the run
    OptimizerKind optimizer = OptimizerKind::adam;
    AdamParams adam;
    RegularizerConfig regularizer;
    Head head = Head::regression;
    int classes = 100;   // classification head bins
    int hidden = 100;
    Activation activation = Activation::relu;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int eval_every = 10;     // test-MSE cadence (epochs)
    int entropy_every = 0;   // entropy-trace cadence; 0 = follow eval_every
    int entropy_subset = 512;

    void validate() const;
};

// Config file: `key value` lines, '#' comments, dotted keys for nesting.
// Every field is optional; defaults are the struct initializers above.
TrainConfig parse_config(std::istream& in);
TrainConfig parse_config_file(const std::filesystem::path& path);
std::string serialize_config(const TrainConfig& cfg);

struct EpochStats {
    int epoch = 0;
    double total = 0.0;
    double task = 0.0;
    double diversity = 0.0;
    double tightness = 0.0;
    double test_mse = 0.0;
    bool evaluated = false;
};

struct RunResult {
    std::uint64_t seed = 0;
    bool diverged = false;
    std::string note;
    double final_test_mse = 0.0;
    double final_entropy = 0.0;
    std::vector<EpochStats> curve;
    EntropyTrace entropy_trace;
    double wall_time_s = 0.0;   // measured; never serialized into run files
    std::string config_echo;
};

// One full training run: shuffled mini-batches, per-eval test MSE, entropy
// trace on a fixed test subset shared by every run. Deterministic per
// (config, seed, data); a non-finite loss aborts with `diverged` set.
RunResult train_run(const TrainConfig& cfg, const Dataset& train, const Dataset& test,
                    std::uint64_t seed, const std::string& method = "");

// Deterministic run files: loss curve and entropy trace. Timing is reported
// on stdout by the CLI instead, so repeated runs are byte-identical.
void write_run_files(const RunResult& r, const std::filesystem::path& dir);

struct MultiSeedSummary {
    double mean_mse = 0.0;
    double std_mse = 0.0;   // sample std over seeds; 0 when only one run
    std::vector<RunResult> runs;
};

// Runs cfg.seeds (or the first k of them) and aggregates; the aggregate is
// independent of seed order and of `threads`.
MultiSeedSummary multi_seed(const TrainConfig& cfg, const Dataset& train, const Dataset& test,
                            int k_runs = 0, int threads = 1, const std::string& method = "");

// Derives k worker seeds from one master seed.
std::vector<std::uint64_t> make_seeds(std::uint64_t master, int k);

struct SuiteOptions {
    int seeds = 10;
    std::uint64_t master_seed = 1;
    std::uint64_t train_data_seed = 101;
    std::uint64_t test_data_seed = 202;
    int train_n = 1000;
    int test_n = 10000;
    bool full_test = false;   // linear task: use the 100k test set
    int m = 100;
    int threads = 1;
    int epochs = 0;           // 0 = TrainConfig default
    bool quiet = false;
};

struct CellResult {
    std::string config_id;
    Task task;
    MultiSeedSummary summary;
};

// Named ablation suites; each cell is a multi-seed aggregate. Emits
// results.csv (per-seed rows), summary.csv (per-cell mean/std) and, for the
// entropy suite, traces.csv with the per-method mean entropy curves.
// Valid names: table1, sweep_M, sweep_lambda_d, entropy_curves.
std::vector<CellResult> ablation_suite(const std::string& name, const std::filesystem::path& out_dir,
                                       const SuiteOptions& opts);

const char* task_name(Task t);

} // namespace ordent
