// Command-line front end: dataset generation, training, ablation suites,
// the discretization-bound fuzz check, and standalone entropy estimation.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "ordent/datagen.hpp"
#include "ordent/discretization_bound.hpp"
#include "ordent/entropy.hpp"
#include "ordent/errors.hpp"
#include "ordent/harness.hpp"

namespace {

int default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

ordent::Matrix read_feature_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ordent::data_error(ordent::data_error::kind::io_failure,
                                      "cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (start <= line.size()) {
            const std::size_t pos = line.find(',', start);
            const std::string cell = line.substr(start, pos == std::string::npos ? pos : pos - start);
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end != cell.c_str() + cell.size() || cell.empty())
                throw ordent::data_error(ordent::data_error::kind::malformed_file,
                                         "unparseable feature value '" + cell + "'");
            row.push_back(v);
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ordent::data_error(ordent::data_error::kind::inconsistent,
                                     "feature rows have inconsistent widths");
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw ordent::data_error(ordent::data_error::kind::malformed_file, "no feature rows in file");
    ordent::Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), m.row(static_cast<int>(i)));
    return m;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ordinal-entropy regression toolkit"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Generate an operator-learning dataset");
    std::string gen_task = "linear", gen_out;
    int gen_n = 1000, gen_m = 100, gen_fine = 1000, gen_solver = 101, gen_queries = 1;
    int gen_threads = default_threads();
    std::uint64_t gen_seed = 1;
    double gen_length_scale = 0.2, gen_variance = 1.0, gen_sigma2 = 1.0;
    gen->add_option("--task", gen_task, "linear | nonlinear")->check(CLI::IsMember({"linear", "nonlinear"}));
    gen->add_option("--n", gen_n, "number of function draws")->check(CLI::PositiveNumber);
    gen->add_option("--m", gen_m, "sensor count")->check(CLI::Range(2, 1000000));
    gen->add_option("--seed", gen_seed, "master seed");
    gen->add_option("--out", gen_out, "output file")->required();
    gen->add_option("--length-scale", gen_length_scale, "RBF length scale (linear task)");
    gen->add_option("--variance", gen_variance, "RBF variance (linear task)");
    gen->add_option("--sigma2", gen_sigma2, "GRF variance (nonlinear task)");
    gen->add_option("--fine-grid", gen_fine, "fine quadrature grid points (linear task)");
    gen->add_option("--solver-nodes", gen_solver, "elliptic solver nodes (nonlinear task)");
    gen->add_option("--queries", gen_queries, "query points per function draw");
    gen->add_option("--threads", gen_threads, "worker threads");

    // train
    auto* train = app.add_subcommand("train", "Train over the configured seeds");
    std::string train_config, train_data, test_data, train_out;
    int train_threads = default_threads();
    train->add_option("--config", train_config, "config file (defaults apply when omitted)");
    train->add_option("--train", train_data, "training dataset file")->required();
    train->add_option("--test", test_data, "test dataset file")->required();
    train->add_option("--out", train_out, "output directory")->required();
    train->add_option("--threads", train_threads, "worker threads");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Run an ablation suite");
    std::string suite_name, ablate_out;
    ordent::SuiteOptions opts;
    opts.threads = default_threads();
    ablate->add_option("--suite", suite_name, "table1 | sweep_M | sweep_lambda_d | entropy_curves")
        ->required()
        ->check(CLI::IsMember({"table1", "sweep_M", "sweep_lambda_d", "entropy_curves"}));
    ablate->add_option("--out", ablate_out, "output directory")->required();
    ablate->add_option("--seeds", opts.seeds, "runs per cell")->check(CLI::PositiveNumber);
    ablate->add_option("--master-seed", opts.master_seed, "seed-list master seed");
    ablate->add_option("--train-n", opts.train_n, "training samples");
    ablate->add_option("--test-n", opts.test_n, "test samples");
    ablate->add_flag("--full-test", opts.full_test, "linear task: evaluate on 100k test samples");
    ablate->add_option("--epochs", opts.epochs, "override training epochs");
    ablate->add_option("--threads", opts.threads, "worker threads");

    // verify-lemma
    auto* verify = app.add_subcommand("verify-lemma", "Fuzz the label-discretization error bound");
    int vl_instances = 10000;
    std::uint64_t vl_seed = 7;
    double vl_epsilon = 1e-3;
    verify->add_option("--instances", vl_instances, "number of random instances")->check(CLI::PositiveNumber);
    verify->add_option("--seed", vl_seed, "fuzz seed");
    verify->add_option("--epsilon", vl_epsilon, "target gap for the bin-width bound")->check(CLI::PositiveNumber);

    // entropy
    auto* ent = app.add_subcommand("entropy", "Estimate feature entropy from a CSV of rows");
    std::string ent_in, ent_out;
    double ent_epsilon = 1e-12;
    bool ent_normalized = false;
    ent->add_option("--in", ent_in, "feature CSV (one point per row)")->required();
    ent->add_option("--out", ent_out, "optional output file");
    ent->add_option("--epsilon", ent_epsilon, "epsilon inside the log");
    ent->add_flag("--normalized", ent_normalized, "L2-normalize rows first");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*gen) {
            ordent::Dataset d;
            if (gen_task == "linear") {
                d = ordent::gen_linear_dataset(gen_n, gen_m, ordent::KernelConfig{gen_length_scale, gen_variance, 0.0},
                                               gen_seed, gen_fine, gen_queries, gen_threads);
            } else {
                d = ordent::gen_nonlinear_dataset(gen_n, gen_m, gen_sigma2, gen_seed, gen_solver,
                                                  gen_queries, gen_threads);
            }
            ordent::save_dataset(d, gen_out);
            std::printf("wrote %zu samples to %s\n", d.samples.size(), gen_out.c_str());
        } else if (*train) {
            ordent::TrainConfig cfg;
            if (!train_config.empty()) cfg = ordent::parse_config_file(train_config);
            cfg.validate();
            const ordent::Dataset tr = ordent::load_dataset(train_data);
            const ordent::Dataset te = ordent::load_dataset(test_data);
            const ordent::MultiSeedSummary ms = ordent::multi_seed(cfg, tr, te, 0, train_threads, "train");
            std::filesystem::create_directories(train_out);
            {
                std::ofstream cfg_out(std::filesystem::path(train_out) / "config.txt");
                cfg_out << ordent::serialize_config(cfg);
            }
            std::ofstream runs(std::filesystem::path(train_out) / "runs.csv");
            runs << "seed,test_mse,entropy_final\n";
            char buf[40];
            for (const auto& r : ms.runs) {
                ordent::write_run_files(r, train_out);
                std::snprintf(buf, sizeof buf, "%.17g", r.final_test_mse);
                runs << r.seed << ',' << buf;
                std::snprintf(buf, sizeof buf, "%.17g", r.final_entropy);
                runs << ',' << buf << '\n';
                std::printf("seed %llu: test_mse=%.6g entropy=%.6g wall=%.1fs%s\n",
                            static_cast<unsigned long long>(r.seed), r.final_test_mse, r.final_entropy,
                            r.wall_time_s, r.diverged ? " [diverged]" : "");
            }
            std::ofstream sum(std::filesystem::path(train_out) / "summary.csv");
            sum << "runs,mean_mse,std_mse\n" << ms.runs.size() << ',';
            std::snprintf(buf, sizeof buf, "%.17g", ms.mean_mse);
            sum << buf << ',';
            std::snprintf(buf, sizeof buf, "%.17g", ms.std_mse);
            sum << buf << '\n';
            std::printf("mean test_mse %.6g +- %.6g over %zu runs\n", ms.mean_mse, ms.std_mse, ms.runs.size());
        } else if (*ablate) {
            ordent::ablation_suite(suite_name, ablate_out, opts);
            std::printf("suite %s written to %s\n", suite_name.c_str(), ablate_out.c_str());
        } else if (*verify) {
            const ordent::FuzzSummary s = ordent::run_bound_fuzz(vl_instances, vl_seed, vl_epsilon);
            std::printf("holds: %d/%d\n", s.holds, s.total);
            std::printf("worst slack (lhs - bound): %.3e\n", s.worst_slack);
            std::printf("bin-width bound rechecks: %d, max gap %.3e (target %.3e)\n", s.eta_rechecks,
                        s.max_lhs_after_eta, s.epsilon);
            if (s.holds != s.total || s.max_lhs_after_eta >= s.epsilon) {
                std::fprintf(stderr, "bound violated\n");
                return 3;
            }
        } else if (*ent) {
            const ordent::Matrix feats = read_feature_csv(ent_in);
            const ordent::EntropyEstimate est = ordent::mean_nn_entropy(feats, ent_epsilon, ent_normalized);
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", est.value);
            std::printf("entropy %s n %d dim %d normalized %d\n", buf, est.n, est.dim,
                        est.normalized_inputs ? 1 : 0);
            if (!ent_out.empty()) {
                std::ofstream out(ent_out);
                if (!out) throw ordent::data_error(ordent::data_error::kind::io_failure,
                                                   "cannot open " + ent_out);
                out << "entropy,n,dim,normalized\n" << buf << ',' << est.n << ',' << est.dim << ','
                    << (est.normalized_inputs ? 1 : 0) << '\n';
            }
        }
    } catch (const ordent::invalid_input_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const ordent::data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const ordent::numerical_error& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
