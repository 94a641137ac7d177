#include "qpk/classical.hpp"
#include "qpk/errors.hpp"
#include "qpk/harness.hpp"
#include "qpk/optim.hpp"
#include "qpk/pathkernel.hpp"
#include "qpk/qnn.hpp"
#include "qpk/svm.hpp"
#include "qpk/xordata.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

namespace py = pybind11;

namespace {

using Matrix = std::vector<std::vector<double>>;

qpk::qnn::QnnModel make_model(int d, int layers, bool double_zz_for_d2) {
    qpk::qnn::QnnConfig cfg;
    cfg.d = d;
    cfg.layers = layers;
    cfg.double_zz_for_d2 = double_zz_for_d2;
    return qpk::qnn::QnnModel(cfg);
}

qpk::optim::ParameterTrajectory traj_from_lists(const Matrix& thetas,
                                                const std::vector<double>& losses) {
    qpk::optim::ParameterTrajectory traj;
    traj.thetas = thetas;
    traj.losses = losses.empty() ? std::vector<double>(thetas.size(), 0.0) : losses;
    return traj;
}

Matrix gram_rows(const qpk::pathkernel::GramMatrix& g) {
    Matrix out(static_cast<std::size_t>(g.rows));
    for (int i = 0; i < g.rows; ++i) {
        out[static_cast<std::size_t>(i)].assign(
            g.values.begin() + static_cast<std::ptrdiff_t>(i) * g.cols,
            g.values.begin() + static_cast<std::ptrdiff_t>(i + 1) * g.cols);
    }
    return out;
}

qpk::pathkernel::GramMatrix gram_from_rows(const Matrix& values,
                                           qpk::pathkernel::KernelKind kind) {
    qpk::pathkernel::GramMatrix g;
    g.rows = static_cast<int>(values.size());
    g.cols = values.empty() ? 0 : static_cast<int>(values.front().size());
    g.kind = kind;
    for (const auto& row : values) {
        if (static_cast<int>(row.size()) != g.cols) {
            throw qpk::ShapeError("ragged Gram rows");
        }
        g.values.insert(g.values.end(), row.begin(), row.end());
    }
    g.row_ids.resize(static_cast<std::size_t>(g.rows));
    g.col_ids.resize(static_cast<std::size_t>(g.cols));
    for (int i = 0; i < g.rows; ++i) g.row_ids[static_cast<std::size_t>(i)] = i;
    for (int j = 0; j < g.cols; ++j) g.col_ids[static_cast<std::size_t>(j)] = j;
    return g;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "statevector QNN, tangent/path kernels, kernel SVM and the XOR mixture benchmark";

    py::register_exception<qpk::ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<qpk::ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<qpk::CapacityError>(m, "CapacityError", PyExc_ValueError);
    py::register_exception<qpk::IndexError>(m, "IndexError", PyExc_IndexError);
    py::register_exception<qpk::DegenerateLabelsError>(m, "DegenerateLabelsError",
                                                       PyExc_ValueError);

    m.def(
        "predict",
        [](const std::vector<double>& x, const std::vector<double>& theta, int layers,
           bool double_zz_for_d2) {
            return make_model(static_cast<int>(x.size()), layers, double_zz_for_d2)
                .predict(x, theta);
        },
        py::arg("x"), py::arg("theta"), py::arg("layers"), py::arg("double_zz_for_d2") = false,
        "expectation value of the layered model on one input");

    m.def(
        "gradient",
        [](const std::vector<double>& x, const std::vector<double>& theta, int layers,
           bool double_zz_for_d2) {
            return make_model(static_cast<int>(x.size()), layers, double_zz_for_d2)
                .gradient(x, theta);
        },
        py::arg("x"), py::arg("theta"), py::arg("layers"), py::arg("double_zz_for_d2") = false,
        "parameter-shift gradient of predict");

    m.def(
        "gradient_fd",
        [](const std::vector<double>& x, const std::vector<double>& theta, int layers, double h,
           bool double_zz_for_d2) {
            const auto model = make_model(static_cast<int>(x.size()), layers, double_zz_for_d2);
            return qpk::qnn::gradient_fd(model, x, theta, h);
        },
        py::arg("x"), py::arg("theta"), py::arg("layers"), py::arg("h") = 1e-5,
        py::arg("double_zz_for_d2") = false, "central finite-difference gradient");

    m.def(
        "single_qubit_predict",
        [](double x, double theta) {
            const qpk::qnn::SingleQubitModel model;
            const std::vector<double> xv{x};
            const std::vector<double> tv{theta};
            return model.predict(xv, tv);
        },
        py::arg("x"), py::arg("theta"),
        "one-qubit X-feature/X-ansatz model; equals cos(2 (theta + x))");

    m.def(
        "generate_xor",
        [](int d, int d_prime, double noise, int n, std::uint64_t seed, bool noise_is_variance) {
            const auto ds = qpk::xordata::generate(d, d_prime, noise, n, seed, noise_is_variance);
            return py::make_tuple(ds.points, ds.labels);
        },
        py::arg("d"), py::arg("d_prime"), py::arg("noise"), py::arg("n"), py::arg("seed"),
        py::arg("noise_is_variance") = false,
        "Gaussian XOR mixture: returns (points, labels)");

    m.def(
        "oracle_label",
        [](const std::vector<double>& x, int d_prime) {
            return qpk::xordata::oracle_label(x, d_prime);
        },
        py::arg("x"), py::arg("d_prime"), "sign of the product of the first d' coordinates");

    m.def(
        "train_qnn",
        [](const Matrix& points, const std::vector<int>& labels, int layers, int epochs,
           double lr, std::uint64_t seed, const std::string& optimizer, const std::string& loss,
           bool double_zz_for_d2) {
            if (points.empty()) throw qpk::ShapeError("empty training set");
            const auto model =
                make_model(static_cast<int>(points.front().size()), layers, double_zz_for_d2);
            qpk::optim::TrainConfig cfg;
            cfg.optimizer = qpk::optim::optimizer_from_string(optimizer);
            cfg.loss = qpk::optim::loss_from_string(loss);
            cfg.learning_rate = lr;
            cfg.epochs = epochs;
            cfg.seed = seed;
            const auto traj = qpk::optim::train(points, labels, model, cfg);
            return py::make_tuple(traj.thetas, traj.losses);
        },
        py::arg("points"), py::arg("labels"), py::arg("layers"), py::arg("epochs") = 1000,
        py::arg("lr") = 0.1, py::arg("seed") = 0, py::arg("optimizer") = "ADAM",
        py::arg("loss") = "MSE", py::arg("double_zz_for_d2") = false,
        "full-batch training; returns (thetas, losses) with one entry per epoch incl. epoch 0");

    m.def(
        "param_deviation",
        [](const Matrix& thetas, int epoch) {
            return qpk::optim::param_deviation(traj_from_lists(thetas, {}), epoch);
        },
        py::arg("thetas"), py::arg("epoch"),
        "||theta(n) - theta(0)|| / ||theta(0)|| over a recorded trajectory");

    m.def(
        "qntk",
        [](const std::vector<double>& x, const std::vector<double>& x_prime,
           const std::vector<double>& theta, int layers, bool double_zz_for_d2) {
            const auto model = make_model(static_cast<int>(x.size()), layers, double_zz_for_d2);
            return qpk::pathkernel::qntk(x, x_prime, theta, model);
        },
        py::arg("x"), py::arg("x_prime"), py::arg("theta"), py::arg("layers"),
        py::arg("double_zz_for_d2") = false, "tangent kernel at a fixed parameter point");

    m.def(
        "qntk_gram",
        [](const Matrix& rows, const Matrix& cols, const std::vector<double>& theta, int layers,
           bool double_zz_for_d2) {
            if (rows.empty()) throw qpk::ShapeError("empty row set");
            const auto model =
                make_model(static_cast<int>(rows.front().size()), layers, double_zz_for_d2);
            return gram_rows(qpk::pathkernel::qntk_gram(rows, cols, theta, model));
        },
        py::arg("rows"), py::arg("cols"), py::arg("theta"), py::arg("layers"),
        py::arg("double_zz_for_d2") = false);

    m.def(
        "qpk_gram",
        [](const Matrix& rows, const Matrix& cols, const Matrix& thetas, int layers,
           bool include_final, bool double_zz_for_d2) {
            if (rows.empty()) throw qpk::ShapeError("empty row set");
            const auto model =
                make_model(static_cast<int>(rows.front().size()), layers, double_zz_for_d2);
            const auto traj = traj_from_lists(thetas, {});
            return gram_rows(qpk::pathkernel::qpk_gram(rows, cols, traj, model, include_final));
        },
        py::arg("rows"), py::arg("cols"), py::arg("thetas"), py::arg("layers"),
        py::arg("include_final") = false, py::arg("double_zz_for_d2") = false,
        "mean of per-epoch tangent Grams along a trajectory");

    m.def(
        "effective_qpk_gram",
        [](const Matrix& rows, const Matrix& cols, const Matrix& thetas, int layers,
           double rel_tol, bool include_final, bool double_zz_for_d2) {
            if (rows.empty()) throw qpk::ShapeError("empty row set");
            const auto model =
                make_model(static_cast<int>(rows.front().size()), layers, double_zz_for_d2);
            const auto traj = traj_from_lists(thetas, {});
            return gram_rows(qpk::pathkernel::effective_qpk_gram(rows, cols, traj, model, rel_tol,
                                                                 include_final));
        },
        py::arg("rows"), py::arg("cols"), py::arg("thetas"), py::arg("layers"),
        py::arg("rel_tol") = 1e-6, py::arg("include_final") = false,
        py::arg("double_zz_for_d2") = false);

    m.def(
        "psd_report",
        [](const Matrix& gram) {
            const auto rep =
                qpk::pathkernel::psd_report(gram_from_rows(gram, qpk::pathkernel::KernelKind::Qntk));
            return py::make_tuple(rep.min_eigenvalue, rep.max_eigenvalue, rep.symmetric_defect);
        },
        py::arg("gram"), "(min_eigenvalue, max_eigenvalue, symmetric_defect) of a square Gram");

    m.def(
        "svm_train",
        [](const Matrix& gram, const std::vector<int>& labels, double C, double tol,
           int max_passes) {
            const auto g = gram_from_rows(gram, qpk::pathkernel::KernelKind::Qntk);
            const auto model = qpk::svm::svm_train(g, labels, C, tol, max_passes);
            py::dict out;
            out["alpha"] = model.alpha;
            out["bias"] = model.bias;
            out["support_indices"] = model.support_indices;
            out["labels"] = model.labels;
            out["C"] = model.C;
            return out;
        },
        py::arg("gram"), py::arg("labels"), py::arg("C") = 1.0, py::arg("tol") = 1e-3,
        py::arg("max_passes") = 200, "SMO on a precomputed kernel; returns the dual solution");

    m.def(
        "svm_predict",
        [](const py::dict& model, const Matrix& cross_gram) {
            qpk::svm::SvmModel m2;
            m2.alpha = model["alpha"].cast<std::vector<double>>();
            m2.bias = model["bias"].cast<double>();
            m2.support_indices = model["support_indices"].cast<std::vector<int>>();
            m2.labels = model["labels"].cast<std::vector<int>>();
            m2.C = model["C"].cast<double>();
            return qpk::svm::svm_predict(
                m2, gram_from_rows(cross_gram, qpk::pathkernel::KernelKind::Qntk));
        },
        py::arg("model"), py::arg("cross_gram"),
        "labels for test rows given a test-by-train Gram");

    m.def(
        "accuracy",
        [](const std::vector<int>& preds, const std::vector<int>& labels) {
            return qpk::svm::accuracy(preds, labels);
        },
        py::arg("preds"), py::arg("labels"));

    m.def(
        "mlp_train",
        [](const Matrix& points, const std::vector<int>& labels, std::uint64_t seed, int epochs,
           double lr, int h) {
            qpk::xordata::LabeledDataset ds;
            ds.points = points;
            ds.labels = labels;
            ds.meta.d = points.empty() ? 0 : static_cast<int>(points.front().size());
            ds.meta.n = static_cast<int>(points.size());
            const auto fit = qpk::classical::mlp_train(ds, seed, epochs, lr, h);
            py::dict out;
            out["losses"] = fit.losses;
            out["train_accuracy"] =
                qpk::classical::mlp_accuracy(fit.trained, points, labels);
            return out;
        },
        py::arg("points"), py::arg("labels"), py::arg("seed") = 0, py::arg("epochs") = 1000,
        py::arg("lr") = 0.001, py::arg("h") = 0,
        "two-hidden-layer ReLU net trained with full-batch ADAM on MSE");

    m.def("rf_feature_count", &qpk::classical::rf_feature_count, py::arg("d"), py::arg("h"));

    m.def(
        "rf_gram",
        [](const Matrix& rows, const Matrix& cols, int h, std::uint64_t seed) {
            if (rows.empty()) throw qpk::ShapeError("empty row set");
            const auto map = qpk::classical::make_rf_map(
                static_cast<int>(rows.front().size()), h, seed);
            return gram_rows(qpk::classical::rf_gram(rows, cols, map));
        },
        py::arg("rows"), py::arg("cols"), py::arg("h"), py::arg("seed") = 0,
        "random ReLU feature kernel Gram");

    m.attr("__version__") = "0.1.0";
}
