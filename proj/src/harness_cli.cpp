#include "qpk/errors.hpp"
#include "qpk/harness.hpp"
#include "qpk/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace qpk::harness {

namespace {

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = -1;
    std::string out_dir;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "experiment config JSON")->required();
    sub->add_option("--seed", args.seed, "override the config's seed list with one seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    sub->add_option("--jobs", args.jobs, "worker threads (default: config, then QPK_JOBS, then 1)");
    sub->add_option("--out", args.out_dir, "override the config's output directory");
}

ExperimentConfig resolve_config(const CommonArgs& args) {
    ExperimentConfig cfg = ExperimentConfig::load(args.config_path);
    if (args.seed_set) {
        cfg.seeds = {args.seed};
    }
    if (args.jobs >= 0) {
        cfg.jobs = args.jobs;
    }
    if (!args.out_dir.empty()) {
        cfg.output_dir = args.out_dir;
    }
    cfg.validate();
    return cfg;
}

int report_failures(const std::vector<CellFailure>& failures) {
    if (failures.empty()) return 0;
    for (const auto& f : failures) {
        std::cerr << "cell failure [" << f.stage << "] " << f.cell << ": " << f.message << "\n";
    }
    return 2;
}

} // namespace

int cli(int argc, const char* const* argv) {
    CLI::App app{"quantum path kernel laboratory"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, kernel_args, svm_args, run_args, baseline_args, report_args;

    auto* gen = app.add_subcommand("gen-data", "generate the XOR mixture datasets");
    add_common(gen, gen_args);
    auto* train = app.add_subcommand("train", "train the models and record trajectories");
    add_common(train, train_args);
    auto* kernels = app.add_subcommand("kernels", "build tangent/path kernel Grams");
    add_common(kernels, kernel_args);
    auto* svm_cmd = app.add_subcommand("svm", "train SVMs on the Grams and emit metrics");
    add_common(svm_cmd, svm_args);
    auto* run = app.add_subcommand("run", "full pipeline: gen-data, train, kernels, svm");
    add_common(run, run_args);
    auto* baseline = app.add_subcommand("baseline", "classical MLP vs random-feature comparison");
    add_common(baseline, baseline_args);
    auto* report = app.add_subcommand("report", "render accuracy/loss/deviation curves");
    add_common(report, report_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exit 0
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e); // prints the error and usage
        return 1;
    }

    try {
        if (gen->parsed()) {
            const auto cfg = resolve_config(gen_args);
            std::vector<CellFailure> failures;
            stage_gen_data(cfg, failures);
            std::cout << "datasets written under " << cfg.run_root().string() << "\n";
            return report_failures(failures);
        }
        if (train->parsed()) {
            const auto cfg = resolve_config(train_args);
            std::vector<CellFailure> failures;
            stage_train(cfg, failures);
            std::cout << "trajectories written under " << cfg.run_root().string() << "\n";
            return report_failures(failures);
        }
        if (kernels->parsed()) {
            const auto cfg = resolve_config(kernel_args);
            std::vector<CellFailure> failures;
            stage_kernels(cfg, failures);
            std::cout << "Gram matrices written under " << cfg.run_root().string() << "\n";
            return report_failures(failures);
        }
        if (svm_cmd->parsed()) {
            const auto cfg = resolve_config(svm_args);
            std::vector<CellFailure> failures;
            const auto metrics = stage_svm(cfg, failures);
            io::write_file(cfg.run_root() / "metrics.csv", metrics_to_csv(metrics));
            std::cout << "metrics.csv written under " << cfg.run_root().string() << "\n";
            return report_failures(failures);
        }
        if (run->parsed()) {
            const auto cfg = resolve_config(run_args);
            const auto artifacts = run_experiment(cfg);
            std::cout << "pipeline complete: " << artifacts.metrics.size() << " metrics rows in "
                      << artifacts.root.string() << "\n";
            return report_failures(artifacts.failures);
        }
        if (baseline->parsed()) {
            const auto cfg = resolve_config(baseline_args);
            const auto artifacts = run_baseline(cfg);
            std::cout << "baseline comparison: " << artifacts.rows.size() << " rows in "
                      << (artifacts.root / "baseline").string() << "\n";
            return 0;
        }
        if (report->parsed()) {
            const auto cfg = resolve_config(report_args);
            write_report(cfg);
            std::cout << "report written under " << (cfg.run_root() / "report").string() << "\n";
            return 0;
        }
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ProvenanceError& e) {
        std::cerr << "provenance error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace qpk::harness
