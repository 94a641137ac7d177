#include "qpk/errors.hpp"
#include "qpk/harness.hpp"
#include "qpk/io.hpp"
#include "qpk/optim.hpp"

#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace qpk::harness {

namespace {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
    int n = 0;
};

MeanStd mean_std(const std::vector<double>& v) {
    MeanStd out;
    out.n = static_cast<int>(v.size());
    if (v.empty()) return out;
    double sum = 0.0;
    for (const double x : v) sum += x;
    out.mean = sum / static_cast<double>(v.size());
    if (v.size() >= 2) {
        double ss = 0.0;
        for (const double x : v) ss += (x - out.mean) * (x - out.mean);
        out.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return out;
}

std::string eps_tag(double eps) { return "eps" + io::fmtg(eps); }

} // namespace

void write_report(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto root = cfg.run_root();
    const auto metrics_path = root / "metrics.csv";
    if (!std::filesystem::exists(metrics_path)) {
        throw ParameterError("no metrics at " + metrics_path.string() + "; run the pipeline first");
    }
    const auto metrics = load_metrics(metrics_path);
    if (metrics.empty()) {
        throw ParameterError("metrics table is empty; nothing to report");
    }
    const auto report_dir = root / "report";
    std::filesystem::create_directories(report_dir);

    std::vector<std::string> kernels = {"ORACLE", "QNTK", "QPK"};
    if (cfg.kernel.effective) kernels.push_back("EFFECTIVE_QPK");

    std::ostringstream summary;
    summary << "run " << cfg.config_hash() << "\n";
    int missing_cells = 0;

    for (const double eps : cfg.dataset.noise) {
        // Accuracy-vs-depth curves, mean and sample standard deviation over seeds.
        for (const bool use_test : {true, false}) {
            std::vector<svg::Series> chart;
            std::ostringstream csv;
            csv << "L,kernel,mean,std,n_seeds\n";
            for (const auto& kernel : kernels) {
                svg::Series series;
                series.name = kernel;
                for (const int layers : cfg.model.layers) {
                    std::vector<double> vals;
                    for (const auto& r : metrics) {
                        if (r.eps == eps && r.layers == layers && r.kernel == kernel) {
                            vals.push_back(use_test ? r.test_acc : r.train_acc);
                        }
                    }
                    if (vals.empty()) {
                        if (use_test) ++missing_cells;
                        continue; // gap: cell failed or was skipped
                    }
                    const MeanStd ms = mean_std(vals);
                    series.x.push_back(layers);
                    series.y.push_back(ms.mean);
                    series.yerr.push_back(ms.std);
                    csv << layers << "," << kernel << "," << io::fmt17(ms.mean) << ","
                        << io::fmt17(ms.std) << "," << ms.n << "\n";
                }
                if (!series.x.empty()) chart.push_back(std::move(series));
            }
            const std::string stem =
                std::string(use_test ? "test" : "train") + "_accuracy_" + eps_tag(eps);
            io::write_file(report_dir / (stem + ".csv"), csv.str());
            if (!chart.empty()) {
                svg::write_line_chart(report_dir / (stem + ".svg"),
                                      std::string(use_test ? "test" : "train") +
                                          " accuracy, noise " + io::fmtg(eps),
                                      "layers", "accuracy", chart);
            }
        }

        // Loss and deviation curves for the first seed, one series per depth.
        const std::uint64_t seed = cfg.seeds.front();
        std::vector<svg::Series> loss_chart;
        std::vector<svg::Series> dev_chart;
        std::ostringstream loss_csv;
        std::ostringstream dev_csv;
        loss_csv << "epoch";
        dev_csv << "epoch";
        std::vector<optim::ParameterTrajectory> trajs;
        std::vector<int> traj_layers;
        for (const int layers : cfg.model.layers) {
            const auto path = root / "traj" /
                              ("traj_" + eps_tag(eps) + "_L" + std::to_string(layers) + "_seed" +
                               std::to_string(seed) + ".csv");
            if (!std::filesystem::exists(path)) continue;
            trajs.push_back(optim::load_trajectory(path));
            traj_layers.push_back(layers);
            loss_csv << ",L" << layers;
            dev_csv << ",L" << layers;
        }
        loss_csv << "\n";
        dev_csv << "\n";
        if (!trajs.empty()) {
            const std::size_t epochs = trajs.front().losses.size();
            for (std::size_t t = 0; t < epochs; ++t) {
                loss_csv << t;
                dev_csv << t;
                for (const auto& traj : trajs) {
                    loss_csv << "," << io::fmt17(traj.losses[t]);
                    dev_csv << ","
                            << io::fmt17(optim::param_deviation(traj, static_cast<int>(t)));
                }
                loss_csv << "\n";
                dev_csv << "\n";
            }
            for (std::size_t k = 0; k < trajs.size(); ++k) {
                svg::Series ls;
                svg::Series ds;
                ls.name = "L=" + std::to_string(traj_layers[k]);
                ds.name = ls.name;
                for (std::size_t t = 0; t < trajs[k].losses.size(); ++t) {
                    ls.x.push_back(static_cast<double>(t));
                    ls.y.push_back(trajs[k].losses[t]);
                    ds.x.push_back(static_cast<double>(t));
                    ds.y.push_back(optim::param_deviation(trajs[k], static_cast<int>(t)));
                }
                loss_chart.push_back(std::move(ls));
                dev_chart.push_back(std::move(ds));
            }
            const std::string ltag = "loss_" + eps_tag(eps) + "_seed" + std::to_string(seed);
            const std::string dtag = "deviation_" + eps_tag(eps) + "_seed" + std::to_string(seed);
            io::write_file(report_dir / (ltag + ".csv"), loss_csv.str());
            io::write_file(report_dir / (dtag + ".csv"), dev_csv.str());
            svg::write_line_chart(report_dir / (ltag + ".svg"),
                                  "training loss, noise " + io::fmtg(eps), "epoch", "loss",
                                  loss_chart);
            svg::write_line_chart(report_dir / (dtag + ".svg"),
                                  "parameter deviation, noise " + io::fmtg(eps), "epoch",
                                  "||theta(n)-theta(0)|| / ||theta(0)||", dev_chart);
        }
    }

    summary << "metrics rows: " << metrics.size() << "\n";
    summary << "missing (eps, L, kernel) cells: " << missing_cells << "\n";
    const auto failures_path = root / "failures.csv";
    if (std::filesystem::exists(failures_path)) {
        summary << "failures recorded in failures.csv\n";
    } else {
        summary << "no recorded failures\n";
    }
    io::write_file(report_dir / "summary.txt", summary.str());
}

} // namespace qpk::harness
