#include "qpk/classical.hpp"

#include "qpk/errors.hpp"
#include "qpk/parallel.hpp"
#include "qpk/rng.hpp"
#include "qpk/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qpk::classical {

namespace {

double relu(double v) { return v > 0.0 ? v : 0.0; }
double relu_grad(double v) { return v > 0.0 ? 1.0 : 0.0; } // subgradient 0 at the kink

void check_x(std::span<const double> x, int d) {
    if (static_cast<int>(x.size()) != d) {
        throw ShapeError("input has " + std::to_string(x.size()) + " features, expected " +
                         std::to_string(d));
    }
}

std::vector<double> rf_features(std::span<const double> x, const RandomFeatureMap& map) {
    check_x(x, map.d);
    std::vector<double> phi(static_cast<std::size_t>(map.f), 0.0);
    for (int i = 0; i < map.f; ++i) {
        double z = 0.0;
        for (int j = 0; j < map.d; ++j) {
            z += map.w[static_cast<std::size_t>(i * map.d + j)] * x[static_cast<std::size_t>(j)];
        }
        phi[static_cast<std::size_t>(i)] = relu(z);
    }
    return phi;
}

} // namespace

MlpParams MlpParams::zeros(int d, int h) {
    MlpParams p;
    p.d = d;
    p.h = h;
    p.w1.assign(static_cast<std::size_t>(h * d), 0.0);
    p.b1.assign(static_cast<std::size_t>(h), 0.0);
    p.w2.assign(static_cast<std::size_t>(h * h), 0.0);
    p.b2.assign(static_cast<std::size_t>(h), 0.0);
    p.w3.assign(static_cast<std::size_t>(h), 0.0);
    p.b3 = 0.0;
    return p;
}

int default_hidden_units(int d) {
    return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
}

double mlp_forward(std::span<const double> x, const MlpParams& p) {
    check_x(x, p.d);
    const int h = p.h;
    std::vector<double> a1(static_cast<std::size_t>(h));
    for (int i = 0; i < h; ++i) {
        double z = p.b1[static_cast<std::size_t>(i)];
        for (int j = 0; j < p.d; ++j) {
            z += p.w1[static_cast<std::size_t>(i * p.d + j)] * x[static_cast<std::size_t>(j)];
        }
        a1[static_cast<std::size_t>(i)] = relu(z);
    }
    double out = p.b3;
    for (int i = 0; i < h; ++i) {
        double z = p.b2[static_cast<std::size_t>(i)];
        for (int j = 0; j < h; ++j) {
            z += p.w2[static_cast<std::size_t>(i * h + j)] * a1[static_cast<std::size_t>(j)];
        }
        out += p.w3[static_cast<std::size_t>(i)] * relu(z);
    }
    return out;
}

MlpParams MlpModel::unpack(std::span<const double> theta) const {
    if (static_cast<int>(theta.size()) != param_count()) {
        throw ShapeError("MLP parameter vector has wrong length");
    }
    MlpParams p = MlpParams::zeros(d_, h_);
    std::size_t k = 0;
    for (double& v : p.w1) v = theta[k++];
    for (double& v : p.b1) v = theta[k++];
    for (double& v : p.w2) v = theta[k++];
    for (double& v : p.b2) v = theta[k++];
    for (double& v : p.w3) v = theta[k++];
    p.b3 = theta[k++];
    return p;
}

std::vector<double> MlpModel::pack(const MlpParams& p) const {
    std::vector<double> theta;
    theta.reserve(static_cast<std::size_t>(param_count()));
    theta.insert(theta.end(), p.w1.begin(), p.w1.end());
    theta.insert(theta.end(), p.b1.begin(), p.b1.end());
    theta.insert(theta.end(), p.w2.begin(), p.w2.end());
    theta.insert(theta.end(), p.b2.begin(), p.b2.end());
    theta.insert(theta.end(), p.w3.begin(), p.w3.end());
    theta.push_back(p.b3);
    return theta;
}

double MlpModel::predict(std::span<const double> x, std::span<const double> theta) const {
    return mlp_forward(x, unpack(theta));
}

std::vector<double> MlpModel::gradient(std::span<const double> x,
                                       std::span<const double> theta) const {
    const MlpParams p = unpack(theta);
    check_x(x, d_);
    const int h = h_;
    const int d = d_;

    std::vector<double> z1(static_cast<std::size_t>(h));
    std::vector<double> a1(static_cast<std::size_t>(h));
    for (int i = 0; i < h; ++i) {
        double z = p.b1[static_cast<std::size_t>(i)];
        for (int j = 0; j < d; ++j) {
            z += p.w1[static_cast<std::size_t>(i * d + j)] * x[static_cast<std::size_t>(j)];
        }
        z1[static_cast<std::size_t>(i)] = z;
        a1[static_cast<std::size_t>(i)] = relu(z);
    }
    std::vector<double> z2(static_cast<std::size_t>(h));
    std::vector<double> a2(static_cast<std::size_t>(h));
    for (int i = 0; i < h; ++i) {
        double z = p.b2[static_cast<std::size_t>(i)];
        for (int j = 0; j < h; ++j) {
            z += p.w2[static_cast<std::size_t>(i * h + j)] * a1[static_cast<std::size_t>(j)];
        }
        z2[static_cast<std::size_t>(i)] = z;
        a2[static_cast<std::size_t>(i)] = relu(z);
    }

    MlpParams g = MlpParams::zeros(d, h);
    g.b3 = 1.0;
    std::vector<double> dz2(static_cast<std::size_t>(h));
    for (int i = 0; i < h; ++i) {
        g.w3[static_cast<std::size_t>(i)] = a2[static_cast<std::size_t>(i)];
        dz2[static_cast<std::size_t>(i)] =
            p.w3[static_cast<std::size_t>(i)] * relu_grad(z2[static_cast<std::size_t>(i)]);
    }
    std::vector<double> da1(static_cast<std::size_t>(h), 0.0);
    for (int i = 0; i < h; ++i) {
        const double di = dz2[static_cast<std::size_t>(i)];
        g.b2[static_cast<std::size_t>(i)] = di;
        for (int j = 0; j < h; ++j) {
            g.w2[static_cast<std::size_t>(i * h + j)] = di * a1[static_cast<std::size_t>(j)];
            da1[static_cast<std::size_t>(j)] += di * p.w2[static_cast<std::size_t>(i * h + j)];
        }
    }
    for (int i = 0; i < h; ++i) {
        const double di =
            da1[static_cast<std::size_t>(i)] * relu_grad(z1[static_cast<std::size_t>(i)]);
        g.b1[static_cast<std::size_t>(i)] = di;
        for (int j = 0; j < d; ++j) {
            g.w1[static_cast<std::size_t>(i * d + j)] = di * x[static_cast<std::size_t>(j)];
        }
    }
    return pack(g);
}

MlpTrainResult mlp_train(const xordata::LabeledDataset& ds, std::uint64_t seed, int epochs,
                         double lr, int h) {
    if (ds.points.empty()) {
        throw ShapeError("empty training set");
    }
    const int d = ds.meta.d;
    if (h <= 0) h = default_hidden_units(d);
    const MlpModel model(d, h);

    // Weights N(0,1) in packing order w1, w2, w3; biases stay zero.
    MlpParams init = MlpParams::zeros(d, h);
    rng::Stream stream(seed);
    for (double& v : init.w1) v = stream.next_gaussian();
    for (double& v : init.w2) v = stream.next_gaussian();
    for (double& v : init.w3) v = stream.next_gaussian();

    MlpTrainResult result;
    if (lr == 0.0) {
        // Degenerate rate: nothing moves; report the constant loss trace.
        std::vector<double> preds(ds.points.size());
        const auto theta = model.pack(init);
        for (std::size_t i = 0; i < ds.points.size(); ++i) {
            preds[i] = model.predict(ds.points[i], theta);
        }
        const double l = optim::loss(preds, ds.labels, optim::LossKind::Mse);
        result.losses.assign(static_cast<std::size_t>(epochs) + 1, l);
        result.trained = init;
        result.initial = std::move(init);
        return result;
    }

    optim::TrainConfig cfg;
    cfg.optimizer = optim::OptimizerKind::Adam;
    cfg.learning_rate = lr;
    cfg.epochs = epochs;
    cfg.loss = optim::LossKind::Mse;
    cfg.seed = seed;

    const optim::ParameterTrajectory traj =
        optim::train(ds.points, ds.labels, model, cfg, model.pack(init));

    result.initial = std::move(init);
    result.trained = model.unpack(traj.thetas.back());
    result.losses = traj.losses;
    return result;
}

double mlp_accuracy(const MlpParams& p, const std::vector<std::vector<double>>& points,
                    const std::vector<int>& labels) {
    if (points.size() != labels.size() || points.empty()) {
        throw ShapeError("accuracy needs equal nonempty point/label vectors");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const int pred = mlp_forward(points[i], p) < 0.0 ? -1 : +1;
        if (pred == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(points.size());
}

int rf_feature_count(int d, int h) {
    if (d < 1 || h < 1) {
        throw ParameterError("rf_feature_count needs d, h >= 1");
    }
    const int params = MlpParams::parameter_count(d, h);
    return (params + d - 1) / d;
}

RandomFeatureMap make_rf_map(int d, int h, std::uint64_t seed) {
    RandomFeatureMap map;
    map.d = d;
    map.f = rf_feature_count(d, h);
    map.w.resize(static_cast<std::size_t>(map.f * d));
    rng::Stream stream(seed);
    for (double& v : map.w) {
        v = stream.next_gaussian();
    }
    return map;
}

pathkernel::GramMatrix rf_gram(const std::vector<std::vector<double>>& rows,
                               const std::vector<std::vector<double>>& cols,
                               const RandomFeatureMap& map) {
    std::vector<std::vector<double>> row_phi(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        row_phi[i] = rf_features(rows[i], map);
    }
    std::vector<std::vector<double>> col_phi_storage;
    const std::vector<std::vector<double>>* col_phi = &row_phi;
    if (&rows != &cols) {
        col_phi_storage.resize(cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            col_phi_storage[j] = rf_features(cols[j], map);
        }
        col_phi = &col_phi_storage;
    }

    pathkernel::GramMatrix g;
    g.rows = static_cast<int>(rows.size());
    g.cols = static_cast<int>(cols.size());
    g.kind = pathkernel::KernelKind::Rf;
    g.values.assign(static_cast<std::size_t>(g.rows) * static_cast<std::size_t>(g.cols), 0.0);
    g.row_ids.resize(static_cast<std::size_t>(g.rows));
    g.col_ids.resize(static_cast<std::size_t>(g.cols));
    for (int i = 0; i < g.rows; ++i) g.row_ids[static_cast<std::size_t>(i)] = i;
    for (int j = 0; j < g.cols; ++j) g.col_ids[static_cast<std::size_t>(j)] = j;
    for (int i = 0; i < g.rows; ++i) {
        for (int j = 0; j < g.cols; ++j) {
            const auto& a = row_phi[static_cast<std::size_t>(i)];
            const auto& b = (*col_phi)[static_cast<std::size_t>(j)];
            double dot = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k) {
                dot += a[k] * b[k];
            }
            g.at(i, j) = dot;
        }
    }
    return g;
}

ComparisonResult compare_experiment(int d, const std::vector<double>& noise_grid, int repeats,
                                    std::uint64_t seed, const BaselineOptions& opts, int jobs) {
    if (d < opts.d_prime) {
        throw ParameterError("baseline comparison needs d >= d' = " +
                             std::to_string(opts.d_prime));
    }
    if (repeats < 1 || opts.pool < 1) {
        throw ParameterError("repeats and pool must be >= 1");
    }
    const int h = default_hidden_units(d);
    const int n = 16 * d;

    struct Cell {
        std::size_t eps_idx;
        int repeat;
    };
    std::vector<Cell> cells;
    for (std::size_t e = 0; e < noise_grid.size(); ++e) {
        for (int r = 0; r < repeats; ++r) {
            cells.push_back({e, r});
        }
    }

    std::vector<ComparisonRow> rows(cells.size());
    std::vector<std::vector<pathkernel::PsdReport>> psd(cells.size());
    parallel_for(cells.size(), jobs, [&](std::size_t ci) {
        const auto [eps_idx, repeat] = cells[ci];
        const double eps = noise_grid[eps_idx];
        std::uint64_t cell_seed = rng::derive(seed, "baseline");
        cell_seed = rng::derive(cell_seed, static_cast<std::uint64_t>(d));
        cell_seed = rng::derive(cell_seed, static_cast<std::uint64_t>(eps_idx));
        cell_seed = rng::derive(cell_seed, static_cast<std::uint64_t>(repeat));

        const auto ds = xordata::generate(d, opts.d_prime, eps, n, cell_seed);
        const auto [train, test] =
            xordata::split(ds, opts.train_fraction, rng::derive(cell_seed, "split"));

        ComparisonRow row;
        row.d = d;
        row.eps = eps;
        row.repeat = repeat;
        row.oracle_acc = xordata::oracle_accuracy(test);

        double best_nn = -1.0;
        for (int p = 0; p < opts.pool; ++p) {
            const auto fit = mlp_train(train, rng::derive(rng::derive(cell_seed, "nn"), p),
                                       opts.epochs, opts.learning_rate, h);
            const double score =
                opts.select_by == SelectBy::Test
                    ? mlp_accuracy(fit.trained, test.points, test.labels)
                    : mlp_accuracy(fit.trained, train.points, train.labels);
            const double test_acc = opts.select_by == SelectBy::Test
                                        ? score
                                        : mlp_accuracy(fit.trained, test.points, test.labels);
            if (score > best_nn) {
                best_nn = score;
                row.nn_acc = test_acc;
            }
        }

        double best_rf = -1.0;
        for (int p = 0; p < opts.pool; ++p) {
            const auto map = make_rf_map(d, h, rng::derive(rng::derive(cell_seed, "rf"), p));
            const auto gram = rf_gram(train.points, train.points, map);
            psd[ci].push_back(pathkernel::psd_report(gram));
            const auto model = svm::svm_train(gram, train.labels, opts.svm_c);
            const auto cross = rf_gram(test.points, train.points, map);
            const double test_acc =
                svm::accuracy(svm::svm_predict(model, cross), test.labels);
            double score = test_acc;
            if (opts.select_by == SelectBy::Train) {
                score = svm::accuracy(svm::svm_predict(model, gram), train.labels);
            }
            if (score > best_rf) {
                best_rf = score;
                row.rf_acc = test_acc;
            }
        }
        rows[ci] = row;
    });

    ComparisonResult result;
    result.rows = std::move(rows);
    for (auto& reports : psd) {
        result.rf_psd_reports.insert(result.rf_psd_reports.end(), reports.begin(), reports.end());
    }
    return result;
}

W1Shrinkage w1_shrinkage(const MlpParams& before, const MlpParams& after, int d_prime) {
    if (before.d != after.d || before.h != after.h) {
        throw ShapeError("w1_shrinkage: parameter shapes disagree");
    }
    if (d_prime >= before.d || d_prime < 1) {
        throw ShapeError("w1_shrinkage needs 1 <= d' < d");
    }
    auto column_means = [&](const MlpParams& p) {
        double signal = 0.0;
        double junk = 0.0;
        for (int i = 0; i < p.h; ++i) {
            for (int j = 0; j < p.d; ++j) {
                const double v = std::abs(p.w1[static_cast<std::size_t>(i * p.d + j)]);
                (j < d_prime ? signal : junk) += v;
            }
        }
        signal /= static_cast<double>(p.h * d_prime);
        junk /= static_cast<double>(p.h * (p.d - d_prime));
        return std::pair<double, double>{signal, junk};
    };

    W1Shrinkage out;
    std::tie(out.signal_mean_abs_before, out.junk_mean_abs_before) = column_means(before);
    std::tie(out.signal_mean_abs, out.junk_mean_abs) = column_means(after);
    const double rb = out.signal_mean_abs_before > 0.0
                          ? out.junk_mean_abs_before / out.signal_mean_abs_before
                          : 0.0;
    const double ra = out.signal_mean_abs > 0.0 ? out.junk_mean_abs / out.signal_mean_abs : 0.0;
    out.ratio_change = rb == 0.0 ? (ra == 0.0 ? 1.0 : std::numeric_limits<double>::infinity())
                                 : ra / rb;
    return out;
}

} // namespace qpk::classical
