#include "qpk/errors.hpp"
#include "qpk/harness.hpp"
#include "qpk/io.hpp"
#include "qpk/optim.hpp"
#include "qpk/parallel.hpp"
#include "qpk/pathkernel.hpp"
#include "qpk/qnn.hpp"
#include "qpk/rng.hpp"
#include "qpk/svm.hpp"
#include "qpk/xordata.hpp"

#include <json.hpp>

#include <cmath>
#include <mutex>
#include <sstream>

namespace qpk::harness {

namespace {

using nlohmann::json;

std::string eps_tag(double eps) { return "eps" + io::fmtg(eps); }

std::string cell_tag(double eps, int layers, std::uint64_t seed) {
    return eps_tag(eps) + "_L" + std::to_string(layers) + "_seed" + std::to_string(seed);
}

std::filesystem::path data_csv(const std::filesystem::path& root, double eps,
                               std::uint64_t seed) {
    return root / "data" / ("ds_" + eps_tag(eps) + "_seed" + std::to_string(seed) + ".csv");
}

std::filesystem::path traj_csv(const std::filesystem::path& root, double eps, int layers,
                               std::uint64_t seed) {
    return root / "traj" / ("traj_" + cell_tag(eps, layers, seed) + ".csv");
}

std::filesystem::path gram_csv(const std::filesystem::path& root, const std::string& kind,
                               double eps, int layers, std::uint64_t seed) {
    return root / "gram" / ("gram_" + kind + "_" + cell_tag(eps, layers, seed) + ".csv");
}

std::filesystem::path svm_json_path(const std::filesystem::path& root, const std::string& kind,
                                    double eps, int layers, std::uint64_t seed) {
    return root / "svm" / ("svm_" + kind + "_" + cell_tag(eps, layers, seed) + ".json");
}

std::filesystem::path sidecar(std::filesystem::path p) { return p.replace_extension(".json"); }

// Independent substreams per artifact; the derivation chain is fixed so that
// recorded seeds alone reproduce every file.
std::uint64_t dataset_seed(std::uint64_t seed, std::size_t eps_idx) {
    return rng::derive(rng::derive(seed, "xordata"), static_cast<std::uint64_t>(eps_idx));
}
std::uint64_t split_seed(std::uint64_t ds_seed) { return rng::derive(ds_seed, "split"); }
std::uint64_t init_seed(std::uint64_t seed, std::size_t eps_idx, int layers) {
    return rng::derive(
        rng::derive(rng::derive(seed, "init"), static_cast<std::uint64_t>(eps_idx)),
        static_cast<std::uint64_t>(layers));
}

void write_json(const std::filesystem::path& p, const json& j) {
    io::write_file(p, j.dump(2) + "\n");
}

json read_json(const std::filesystem::path& p) { return json::parse(io::read_file(p)); }

void verify_config_hash(const json& side, const std::string& active,
                        const std::filesystem::path& file) {
    const std::string recorded = side.value("config_hash", "");
    if (recorded != active) {
        throw ProvenanceError("artifact " + file.string() + " was produced by config " +
                              recorded + ", active config is " + active);
    }
}

struct Cell {
    std::size_t eps_idx;
    std::size_t layer_idx;
    std::size_t seed_idx;
};

std::vector<Cell> make_cells(const ExperimentConfig& cfg) {
    std::vector<Cell> cells;
    for (std::size_t e = 0; e < cfg.dataset.noise.size(); ++e) {
        for (std::size_t l = 0; l < cfg.model.layers.size(); ++l) {
            for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
                cells.push_back({e, l, s});
            }
        }
    }
    return cells;
}

qnn::QnnModel make_model(const ExperimentConfig& cfg, int layers) {
    qnn::QnnConfig mc;
    mc.d = cfg.dataset.d;
    mc.layers = layers;
    mc.double_zz_for_d2 = cfg.model.double_zz_for_d2;
    return qnn::QnnModel(mc);
}

struct LoadedData {
    xordata::LabeledDataset full;
    xordata::LabeledDataset train;
    xordata::LabeledDataset test;
    std::string file_hash;
};

LoadedData load_split_dataset(const ExperimentConfig& cfg, double eps, std::uint64_t seed) {
    const auto csv_path = data_csv(cfg.run_root(), eps, seed);
    if (!std::filesystem::exists(csv_path)) {
        throw ParameterError("dataset missing: " + csv_path.string() +
                             " (run the gen-data stage first)");
    }
    const json side = read_json(sidecar(csv_path));
    verify_config_hash(side, cfg.config_hash(), csv_path);

    LoadedData out;
    const std::string bytes = io::read_file(csv_path);
    out.file_hash = io::content_hash(bytes);
    out.full = xordata::dataset_from_csv(bytes);
    out.full.meta.d_prime = cfg.dataset.d_prime;
    out.full.meta.noise = eps;
    out.full.meta.seed = side.value("dataset_seed", std::uint64_t{0});
    std::tie(out.train, out.test) =
        xordata::split(out.full, cfg.dataset.train_fraction, split_seed(out.full.meta.seed));
    return out;
}

struct FailureSink {
    explicit FailureSink(std::vector<CellFailure>& sink) : failures(sink) {}

    std::vector<CellFailure>& failures;
    std::mutex mutex;

    void add(const std::string& stage, const std::string& cell, const std::string& message) {
        std::lock_guard<std::mutex> lock(mutex);
        failures.push_back({stage, cell, message});
    }
};

json psd_to_json(const pathkernel::PsdReport& rep) {
    return json{{"min_eigenvalue", rep.min_eigenvalue},
                {"max_eigenvalue", rep.max_eigenvalue},
                {"symmetric_defect", rep.symmetric_defect}};
}

void save_gram_with_sidecar(const std::filesystem::path& path, pathkernel::GramMatrix gram,
                            const ExperimentConfig& cfg, const std::string& kind_label,
                            const std::string& traj_hash, int n_train, json extra) {
    pathkernel::save_gram(path, gram);
    json side;
    side["config_hash"] = cfg.config_hash();
    side["kernel_kind"] = kind_label;
    side["trajectory_hash"] = traj_hash;
    side["n_train"] = n_train;
    side["rows"] = gram.rows;
    side["cols"] = gram.cols;
    side["psd"] = psd_to_json(pathkernel::psd_report(gram));
    for (auto& [k, v] : extra.items()) {
        side[k] = v;
    }
    write_json(sidecar(path), side);
}

} // namespace

void stage_gen_data(const ExperimentConfig& cfg, std::vector<CellFailure>& failures) {
    const auto root = cfg.run_root();
    struct Item {
        std::size_t eps_idx;
        std::size_t seed_idx;
    };
    std::vector<Item> items;
    for (std::size_t e = 0; e < cfg.dataset.noise.size(); ++e) {
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
            items.push_back({e, s});
        }
    }
    FailureSink sink(failures);
    parallel_for(items.size(), cfg.effective_jobs(), [&](std::size_t i) {
        const auto [e, s] = items[i];
        const double eps = cfg.dataset.noise[e];
        const std::uint64_t seed = cfg.seeds[s];
        const std::string tag = eps_tag(eps) + "_seed" + std::to_string(seed);
        try {
            const std::uint64_t ds_seed = dataset_seed(seed, e);
            const auto ds = xordata::generate(cfg.dataset.d, cfg.dataset.d_prime, eps,
                                              cfg.dataset.n, ds_seed,
                                              cfg.dataset.noise_is_variance);
            const auto path = data_csv(root, eps, seed);
            xordata::save_dataset(path, ds);
            json side;
            side["config_hash"] = cfg.config_hash();
            side["dataset_seed"] = ds_seed;
            side["split_seed"] = split_seed(ds_seed);
            side["train_fraction"] = cfg.dataset.train_fraction;
            side["meta"] = json{{"d", ds.meta.d},
                                {"d_prime", ds.meta.d_prime},
                                {"noise", ds.meta.noise},
                                {"n", ds.meta.n},
                                {"noise_is_variance", ds.meta.noise_is_variance}};
            side["clean_signs"] = ds.clean_signs;
            write_json(sidecar(path), side);
        } catch (const std::exception& e2) {
            sink.add("gen-data", tag, e2.what());
        }
    });
}

void stage_train(const ExperimentConfig& cfg, std::vector<CellFailure>& failures) {
    const auto root = cfg.run_root();
    const auto cells = make_cells(cfg);
    FailureSink sink(failures);
    parallel_for(cells.size(), cfg.effective_jobs(), [&](std::size_t i) {
        const Cell& c = cells[i];
        const double eps = cfg.dataset.noise[c.eps_idx];
        const int layers = cfg.model.layers[c.layer_idx];
        const std::uint64_t seed = cfg.seeds[c.seed_idx];
        const std::string tag = cell_tag(eps, layers, seed);
        try {
            const LoadedData data = load_split_dataset(cfg, eps, seed);
            const auto model = make_model(cfg, layers);

            optim::TrainConfig tc;
            tc.optimizer = optim::optimizer_from_string(cfg.model.optimizer);
            tc.loss = optim::loss_from_string(cfg.model.loss);
            tc.learning_rate = cfg.model.learning_rate;
            tc.epochs = cfg.model.epochs;
            tc.seed = init_seed(seed, c.eps_idx, layers);

            const auto traj = optim::train(data.train.points, data.train.labels, model, tc);
            const auto path = traj_csv(root, eps, layers, seed);
            optim::save_trajectory(path, traj);

            json side;
            side["config_hash"] = cfg.config_hash();
            side["dataset_hash"] = data.file_hash;
            side["init_seed"] = tc.seed;
            side["optimizer"] = cfg.model.optimizer;
            side["loss"] = cfg.model.loss;
            side["learning_rate"] = cfg.model.learning_rate;
            side["epochs"] = cfg.model.epochs;
            side["final_loss"] = traj.losses.back();
            side["param_deviation"] = optim::param_deviation(traj, traj.epochs());
            write_json(sidecar(path), side);
        } catch (const ProvenanceError&) {
            throw;
        } catch (const std::exception& e2) {
            sink.add("train", tag, e2.what());
        }
    });
}

void stage_kernels(const ExperimentConfig& cfg, std::vector<CellFailure>& failures) {
    const auto root = cfg.run_root();
    const auto cells = make_cells(cfg);
    FailureSink sink(failures);
    parallel_for(cells.size(), cfg.effective_jobs(), [&](std::size_t i) {
        const Cell& c = cells[i];
        const double eps = cfg.dataset.noise[c.eps_idx];
        const int layers = cfg.model.layers[c.layer_idx];
        const std::uint64_t seed = cfg.seeds[c.seed_idx];
        const std::string tag = cell_tag(eps, layers, seed);
        try {
            const LoadedData data = load_split_dataset(cfg, eps, seed);
            const auto tpath = traj_csv(root, eps, layers, seed);
            if (!std::filesystem::exists(tpath)) {
                throw ParameterError("trajectory missing: " + tpath.string() +
                                     " (run the train stage first)");
            }
            const json tside = read_json(sidecar(tpath));
            verify_config_hash(tside, cfg.config_hash(), tpath);
            if (tside.value("dataset_hash", "") != data.file_hash) {
                throw ProvenanceError("trajectory " + tpath.string() +
                                      " was trained on a different dataset file");
            }
            const std::string traj_bytes = io::read_file(tpath);
            const std::string traj_hash = io::content_hash(traj_bytes);
            auto traj = optim::trajectory_from_csv(traj_bytes);

            const auto model = make_model(cfg, layers);
            // Square Gram over [train; test]; the svm stage slices blocks.
            std::vector<std::vector<double>> all_points = data.train.points;
            all_points.insert(all_points.end(), data.test.points.begin(),
                              data.test.points.end());
            const int n_train = data.train.size();

            const bool at_final = cfg.kernel.qntk_at == "final";
            const auto& theta_cmp = at_final ? traj.thetas.back() : traj.thetas.front();
            auto qntk = pathkernel::qntk_gram(all_points, all_points, theta_cmp, model);
            save_gram_with_sidecar(gram_csv(root, "QNTK", eps, layers, seed), std::move(qntk),
                                   cfg, "QNTK", traj_hash, n_train,
                                   json{{"theta_point", cfg.kernel.qntk_at}});
            if (at_final) {
                auto qntk0 =
                    pathkernel::qntk_gram(all_points, all_points, traj.thetas.front(), model);
                save_gram_with_sidecar(gram_csv(root, "QNTK_INIT", eps, layers, seed),
                                       std::move(qntk0), cfg, "QNTK", traj_hash, n_train,
                                       json{{"theta_point", "init"}, {"diagnostic", true}});
            }

            const int t_end = traj.epochs() + (cfg.kernel.include_final_epoch ? 1 : 0);
            auto qpk = pathkernel::qpk_gram(all_points, all_points, traj, model,
                                            cfg.kernel.include_final_epoch);
            save_gram_with_sidecar(gram_csv(root, "QPK", eps, layers, seed), std::move(qpk), cfg,
                                   "QPK", traj_hash, n_train,
                                   json{{"epoch_range", json::array({0, t_end})}});
            if (cfg.kernel.effective) {
                auto eff = pathkernel::effective_qpk_gram(all_points, all_points, traj, model,
                                                          cfg.kernel.effective_rel_tol,
                                                          cfg.kernel.include_final_epoch);
                save_gram_with_sidecar(gram_csv(root, "EFFECTIVE_QPK", eps, layers, seed),
                                       std::move(eff), cfg, "EFFECTIVE_QPK", traj_hash, n_train,
                                       json{{"epoch_range", json::array({0, t_end})},
                                            {"rel_tol", cfg.kernel.effective_rel_tol}});
            }
        } catch (const ProvenanceError&) {
            throw;
        } catch (const std::exception& e2) {
            sink.add("kernels", tag, e2.what());
        }
    });
}

std::vector<MetricsRow> stage_svm(const ExperimentConfig& cfg,
                                  std::vector<CellFailure>& failures) {
    const auto root = cfg.run_root();
    const auto cells = make_cells(cfg);
    FailureSink sink(failures);

    std::vector<std::string> kernels = {"QNTK", "QPK"};
    if (cfg.kernel.effective) {
        kernels.push_back("EFFECTIVE_QPK");
    }

    std::vector<std::vector<MetricsRow>> per_cell(cells.size());
    parallel_for(cells.size(), cfg.effective_jobs(), [&](std::size_t i) {
        const Cell& c = cells[i];
        const double eps = cfg.dataset.noise[c.eps_idx];
        const int layers = cfg.model.layers[c.layer_idx];
        const std::uint64_t seed = cfg.seeds[c.seed_idx];
        const std::string tag = cell_tag(eps, layers, seed);
        try {
            const LoadedData data = load_split_dataset(cfg, eps, seed);
            const auto tpath = traj_csv(root, eps, layers, seed);
            if (!std::filesystem::exists(tpath)) {
                throw ParameterError("trajectory missing: " + tpath.string());
            }
            const json tside = read_json(sidecar(tpath));
            verify_config_hash(tside, cfg.config_hash(), tpath);
            const double final_loss = tside.at("final_loss").get<double>();
            const double param_dev = tside.at("param_deviation").get<double>();

            std::vector<MetricsRow> rows;
            MetricsRow oracle;
            oracle.eps = eps;
            oracle.layers = layers;
            oracle.seed = seed;
            oracle.kernel = "ORACLE";
            oracle.train_acc = xordata::oracle_accuracy(data.train);
            oracle.test_acc = xordata::oracle_accuracy(data.test);
            oracle.final_loss = final_loss;
            oracle.param_deviation = param_dev;
            rows.push_back(oracle);

            for (const std::string& kind : kernels) {
                const auto gpath = gram_csv(root, kind, eps, layers, seed);
                if (!std::filesystem::exists(gpath)) {
                    throw ParameterError("Gram missing: " + gpath.string() +
                                         " (run the kernels stage first)");
                }
                const json gside = read_json(sidecar(gpath));
                verify_config_hash(gside, cfg.config_hash(), gpath);
                const std::string gram_bytes = io::read_file(gpath);
                auto full = pathkernel::gram_from_csv(gram_bytes);
                full.kind = pathkernel::kernel_from_string(
                    gside.value("kernel_kind", std::string("QNTK")));
                const int n_train = gside.at("n_train").get<int>();
                if (n_train != data.train.size() || full.rows != data.full.size()) {
                    throw ProvenanceError("Gram " + gpath.string() +
                                          " does not match the dataset split");
                }
                const auto train_gram = full.block(0, n_train, 0, n_train);
                const auto cross_gram = full.block(n_train, full.rows, 0, n_train);

                auto model = svm::svm_train(train_gram, data.train.labels, cfg.svm.c,
                                            cfg.svm.tol, cfg.svm.max_passes);
                model.provenance = "gram=" + io::content_hash(gram_bytes);
                svm::save_model(svm_json_path(root, kind, eps, layers, seed), model);

                MetricsRow row;
                row.eps = eps;
                row.layers = layers;
                row.seed = seed;
                row.kernel = kind;
                row.train_acc =
                    svm::accuracy(svm::svm_predict(model, train_gram), data.train.labels);
                row.test_acc =
                    svm::accuracy(svm::svm_predict(model, cross_gram), data.test.labels);
                row.final_loss = final_loss;
                row.param_deviation = param_dev;
                rows.push_back(row);
            }
            per_cell[i] = std::move(rows);
        } catch (const ProvenanceError&) {
            throw;
        } catch (const std::exception& e2) {
            sink.add("svm", tag, e2.what());
        }
    });

    std::vector<MetricsRow> metrics;
    for (const auto& rows : per_cell) {
        metrics.insert(metrics.end(), rows.begin(), rows.end());
    }
    return metrics;
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
    std::ostringstream out;
    out << "eps,L,seed,kernel,train_acc,test_acc,final_loss,param_deviation\n";
    for (const auto& r : rows) {
        out << io::fmt17(r.eps) << "," << r.layers << "," << r.seed << "," << r.kernel << ","
            << io::fmt17(r.train_acc) << "," << io::fmt17(r.test_acc) << ","
            << io::fmt17(r.final_loss) << "," << io::fmt17(r.param_deviation) << "\n";
    }
    return out.str();
}

std::vector<MetricsRow> load_metrics(const std::filesystem::path& csv_path) {
    const std::string text = io::read_file(csv_path);
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = io::split_csv_line(line);
        if (cells.size() != 8) {
            throw ParameterError("malformed metrics row: '" + line + "'");
        }
        MetricsRow r;
        r.eps = io::parse_double(cells[0]);
        r.layers = static_cast<int>(io::parse_int(cells[1]));
        r.seed = static_cast<std::uint64_t>(io::parse_int(cells[2]));
        r.kernel = cells[3];
        r.train_acc = io::parse_double(cells[4]);
        r.test_acc = io::parse_double(cells[5]);
        r.final_loss = io::parse_double(cells[6]);
        r.param_deviation = io::parse_double(cells[7]);
        rows.push_back(std::move(r));
    }
    return rows;
}

RunArtifacts run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    RunArtifacts artifacts;
    artifacts.root = cfg.run_root();
    std::filesystem::create_directories(artifacts.root);
    io::write_file(artifacts.root / "config.json", cfg.to_json_text());

    stage_gen_data(cfg, artifacts.failures);
    stage_train(cfg, artifacts.failures);
    stage_kernels(cfg, artifacts.failures);
    artifacts.metrics = stage_svm(cfg, artifacts.failures);

    io::write_file(artifacts.root / "metrics.csv", metrics_to_csv(artifacts.metrics));
    if (!artifacts.failures.empty()) {
        std::ostringstream out;
        out << "stage,cell,message\n";
        for (const auto& f : artifacts.failures) {
            std::string msg = f.message;
            for (char& ch : msg) {
                if (ch == ',' || ch == '\n') ch = ';';
            }
            out << f.stage << "," << f.cell << "," << msg << "\n";
        }
        io::write_file(artifacts.root / "failures.csv", out.str());
    }
    return artifacts;
}

BaselineArtifacts run_baseline(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!cfg.baseline) {
        throw ParameterError("config has no baseline section");
    }
    const BaselineSpec& spec = *cfg.baseline;
    BaselineArtifacts artifacts;
    artifacts.root = cfg.run_root();
    std::filesystem::create_directories(artifacts.root / "baseline");
    io::write_file(artifacts.root / "config.json", cfg.to_json_text());

    classical::BaselineOptions opts;
    opts.d_prime = spec.d_prime;
    opts.pool = spec.pool;
    opts.epochs = spec.epochs;
    opts.learning_rate = spec.learning_rate;
    opts.train_fraction = spec.train_fraction;
    opts.select_by =
        spec.select_by == "train" ? classical::SelectBy::Train : classical::SelectBy::Test;

    std::ostringstream psd_out;
    psd_out << "kind,n,min_eigenvalue,max_eigenvalue,symmetric_defect\n";
    for (const int d : spec.dims) {
        const auto result = classical::compare_experiment(d, spec.noise, spec.repeats,
                                                          cfg.seeds.front(), opts,
                                                          cfg.effective_jobs());
        artifacts.rows.insert(artifacts.rows.end(), result.rows.begin(), result.rows.end());
        const int train_n = static_cast<int>(std::lround(16 * d * opts.train_fraction));
        for (const auto& rep : result.rf_psd_reports) {
            psd_out << "RF," << train_n << "," << io::fmt17(rep.min_eigenvalue) << ","
                    << io::fmt17(rep.max_eigenvalue) << "," << io::fmt17(rep.symmetric_defect)
                    << "\n";
        }
    }

    std::ostringstream out;
    out << "d,eps,repeat,oracle_acc,nn_acc,rf_acc\n";
    for (const auto& r : artifacts.rows) {
        out << r.d << "," << io::fmt17(r.eps) << "," << r.repeat << ","
            << io::fmt17(r.oracle_acc) << "," << io::fmt17(r.nn_acc) << ","
            << io::fmt17(r.rf_acc) << "\n";
    }
    io::write_file(artifacts.root / "baseline" / "comparison.csv", out.str());
    io::write_file(artifacts.root / "baseline" / "psd_checks.csv", psd_out.str());

    // W1 snapshot on the configured dataset (Figure-10 style setting).
    {
        const int d = spec.w1_d;
        const std::uint64_t w1_seed = rng::derive(cfg.seeds.front(), "w1");
        const auto ds = xordata::generate(d, spec.d_prime, spec.w1_noise, 16 * d, w1_seed);
        const auto fit = classical::mlp_train(ds, rng::derive(w1_seed, "mlp"), spec.epochs,
                                              spec.learning_rate);
        artifacts.w1 = classical::w1_shrinkage(fit.initial, fit.trained, spec.d_prime);

        auto w1_csv = [](const classical::MlpParams& p) {
            std::ostringstream s;
            for (int i = 0; i < p.h; ++i) {
                for (int j = 0; j < p.d; ++j) {
                    if (j) s << ",";
                    s << io::fmt17(p.w1[static_cast<std::size_t>(i * p.d + j)]);
                }
                s << "\n";
            }
            return s.str();
        };
        io::write_file(artifacts.root / "baseline" / "w1_init.csv", w1_csv(fit.initial));
        io::write_file(artifacts.root / "baseline" / "w1_trained.csv", w1_csv(fit.trained));
        json j;
        j["signal_mean_abs_before"] = artifacts.w1.signal_mean_abs_before;
        j["junk_mean_abs_before"] = artifacts.w1.junk_mean_abs_before;
        j["signal_mean_abs_after"] = artifacts.w1.signal_mean_abs;
        j["junk_mean_abs_after"] = artifacts.w1.junk_mean_abs;
        j["ratio_change"] = artifacts.w1.ratio_change;
        j["d"] = d;
        j["d_prime"] = spec.d_prime;
        j["noise"] = spec.w1_noise;
        j["n"] = 16 * d;
        write_json(artifacts.root / "baseline" / "w1_shrinkage.json", j);
    }
    return artifacts;
}

} // namespace qpk::harness
