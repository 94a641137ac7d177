#include "qpk/pathkernel.hpp"

#include "qpk/errors.hpp"
#include "qpk/io.hpp"
#include "qpk/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <sstream>

namespace qpk::pathkernel {

namespace {

std::vector<std::vector<double>> batch_gradients(const std::vector<std::vector<double>>& points,
                                                 std::span<const double> theta,
                                                 const Predictor& model, int jobs) {
    std::vector<std::vector<double>> grads(points.size());
    parallel_for(points.size(), jobs,
                 [&](std::size_t i) { grads[i] = model.gradient(points[i], theta); });
    return grads;
}

void fill_gram_values(GramMatrix& g, const std::vector<std::vector<double>>& row_grads,
                      const std::vector<std::vector<double>>& col_grads) {
    for (int i = 0; i < g.rows; ++i) {
        const auto& gr = row_grads[static_cast<std::size_t>(i)];
        for (int j = 0; j < g.cols; ++j) {
            const auto& gc = col_grads[static_cast<std::size_t>(j)];
            double dot = 0.0;
            for (std::size_t k = 0; k < gr.size(); ++k) {
                dot += gr[k] * gc[k];
            }
            g.at(i, j) = dot;
        }
    }
}

GramMatrix make_shell(int rows, int cols, KernelKind kind) {
    GramMatrix g;
    g.rows = rows;
    g.cols = cols;
    g.kind = kind;
    g.values.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
    g.row_ids.resize(static_cast<std::size_t>(rows));
    g.col_ids.resize(static_cast<std::size_t>(cols));
    for (int i = 0; i < rows; ++i) g.row_ids[static_cast<std::size_t>(i)] = i;
    for (int j = 0; j < cols; ++j) g.col_ids[static_cast<std::size_t>(j)] = j;
    return g;
}

void check_dims(const std::vector<std::vector<double>>& pts, const Predictor& model,
                const char* what) {
    for (const auto& p : pts) {
        if (static_cast<int>(p.size()) != model.input_dim()) {
            throw ShapeError(std::string(what) + ": point dimensionality " +
                             std::to_string(p.size()) + " does not match model input " +
                             std::to_string(model.input_dim()));
        }
    }
}

double displacement(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double norm2(const std::vector<double>& a) {
    double acc = 0.0;
    for (const double v : a) acc += v * v;
    return std::sqrt(acc);
}

/// Mean of per-epoch tangent Grams over the given epoch subset, streamed in
/// order with the incremental update m += (g - m)/k. One epoch's gradients
/// are held at a time; job parallelism only spreads the per-point gradient
/// evaluations, so the reduction order (and thus every bit of the result) is
/// independent of the job count.
GramMatrix averaged_gram(const std::vector<std::vector<double>>& rows,
                         const std::vector<std::vector<double>>& cols,
                         const optim::ParameterTrajectory& traj,
                         const std::vector<int>& epochs, const Predictor& model,
                         KernelKind kind, int jobs) {
    GramMatrix mean = make_shell(static_cast<int>(rows.size()), static_cast<int>(cols.size()),
                                 kind);
    GramMatrix epoch_gram = make_shell(mean.rows, mean.cols, kind);
    const bool shared = &rows == &cols;
    std::size_t count = 0;
    for (const int t : epochs) {
        const auto& theta = traj.thetas[static_cast<std::size_t>(t)];
        const auto row_grads = batch_gradients(rows, theta, model, jobs);
        if (shared) {
            fill_gram_values(epoch_gram, row_grads, row_grads);
        } else {
            const auto col_grads = batch_gradients(cols, theta, model, jobs);
            fill_gram_values(epoch_gram, row_grads, col_grads);
        }
        ++count;
        const double inv = 1.0 / static_cast<double>(count);
        for (std::size_t i = 0; i < mean.values.size(); ++i) {
            mean.values[i] += (epoch_gram.values[i] - mean.values[i]) * inv;
        }
    }
    return mean;
}

std::vector<int> all_epochs(const optim::ParameterTrajectory& traj, bool include_final) {
    if (traj.thetas.size() < 2) {
        throw ProvenanceError("trajectory too short for a path kernel (need >= 2 entries, got " +
                              std::to_string(traj.thetas.size()) + ")");
    }
    const int end = static_cast<int>(traj.thetas.size()) - (include_final ? 0 : 1);
    std::vector<int> epochs(static_cast<std::size_t>(end));
    for (int t = 0; t < end; ++t) epochs[static_cast<std::size_t>(t)] = t;
    return epochs;
}

} // namespace

std::string to_string(KernelKind k) {
    switch (k) {
    case KernelKind::Qntk: return "QNTK";
    case KernelKind::Qpk: return "QPK";
    case KernelKind::EffectiveQpk: return "EFFECTIVE_QPK";
    case KernelKind::Rf: return "RF";
    }
    return "?";
}

KernelKind kernel_from_string(const std::string& s) {
    if (s == "QNTK") return KernelKind::Qntk;
    if (s == "QPK") return KernelKind::Qpk;
    if (s == "EFFECTIVE_QPK") return KernelKind::EffectiveQpk;
    if (s == "RF") return KernelKind::Rf;
    throw ParameterError("unknown kernel kind '" + s + "'");
}

GramMatrix GramMatrix::block(int r0, int r1, int c0, int c1) const {
    if (r0 < 0 || r1 > rows || c0 < 0 || c1 > cols || r0 >= r1 || c0 >= c1) {
        throw ShapeError("invalid Gram block");
    }
    GramMatrix out;
    out.rows = r1 - r0;
    out.cols = c1 - c0;
    out.kind = kind;
    out.provenance = provenance;
    out.values.reserve(static_cast<std::size_t>(out.rows) * static_cast<std::size_t>(out.cols));
    for (int i = r0; i < r1; ++i) {
        for (int j = c0; j < c1; ++j) {
            out.values.push_back(at(i, j));
        }
    }
    out.row_ids.assign(row_ids.begin() + r0, row_ids.begin() + r1);
    out.col_ids.assign(col_ids.begin() + c0, col_ids.begin() + c1);
    return out;
}

double qntk(std::span<const double> x, std::span<const double> x_prime,
            std::span<const double> theta, const Predictor& model) {
    const std::vector<double> gx = model.gradient(x, theta);
    const std::vector<double> gy = model.gradient(x_prime, theta);
    double dot = 0.0;
    for (std::size_t k = 0; k < gx.size(); ++k) {
        dot += gx[k] * gy[k];
    }
    return dot;
}

GramMatrix qntk_gram(const std::vector<std::vector<double>>& rows,
                     const std::vector<std::vector<double>>& cols,
                     std::span<const double> theta, const Predictor& model, int jobs) {
    check_dims(rows, model, "qntk_gram rows");
    check_dims(cols, model, "qntk_gram cols");
    GramMatrix g = make_shell(static_cast<int>(rows.size()), static_cast<int>(cols.size()),
                              KernelKind::Qntk);
    const auto row_grads = batch_gradients(rows, theta, model, jobs);
    if (&rows == &cols) {
        fill_gram_values(g, row_grads, row_grads);
    } else {
        const auto col_grads = batch_gradients(cols, theta, model, jobs);
        fill_gram_values(g, row_grads, col_grads);
    }
    return g;
}

GramMatrix qpk_gram(const std::vector<std::vector<double>>& rows,
                    const std::vector<std::vector<double>>& cols,
                    const optim::ParameterTrajectory& traj, const Predictor& model,
                    bool include_final, int jobs) {
    check_dims(rows, model, "qpk_gram rows");
    check_dims(cols, model, "qpk_gram cols");
    const std::vector<int> epochs = all_epochs(traj, include_final);
    return averaged_gram(rows, cols, traj, epochs, model, KernelKind::Qpk, jobs);
}

GramMatrix effective_qpk_gram(const std::vector<std::vector<double>>& rows,
                              const std::vector<std::vector<double>>& cols,
                              const optim::ParameterTrajectory& traj, const Predictor& model,
                              double rel_tol, bool include_final, int jobs) {
    if (rel_tol < 0.0 || std::isnan(rel_tol)) {
        throw ParameterError("effective kernel rel_tol must be >= 0");
    }
    check_dims(rows, model, "effective_qpk_gram rows");
    check_dims(cols, model, "effective_qpk_gram cols");
    const std::vector<int> candidates = all_epochs(traj, include_final);

    std::vector<int> kept;
    kept.push_back(candidates.front());
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const auto& last = traj.thetas[static_cast<std::size_t>(kept.back())];
        const auto& cur = traj.thetas[candidates[i]];
        const double rel = displacement(cur, last) / std::max(norm2(last), DBL_EPSILON);
        if (rel >= rel_tol) {
            kept.push_back(candidates[i]);
        }
    }
    GramMatrix g = averaged_gram(rows, cols, traj, kept, model, KernelKind::EffectiveQpk, jobs);
    g.provenance = "kept_epochs=" + std::to_string(kept.size());
    return g;
}

PsdReport psd_report(const GramMatrix& gram) {
    if (!gram.square()) {
        throw ShapeError("psd_report requires a square Gram, got " + std::to_string(gram.rows) +
                         "x" + std::to_string(gram.cols));
    }
    const int n = gram.rows;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
        gram.values.data(), n, n);
    PsdReport rep;
    rep.symmetric_defect = (m - m.transpose()).cwiseAbs().maxCoeff();
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = solver.eigenvalues().minCoeff();
    rep.max_eigenvalue = solver.eigenvalues().maxCoeff();
    return rep;
}

std::string gram_to_csv(const GramMatrix& gram) {
    std::ostringstream out;
    for (int j = 0; j < gram.cols; ++j) {
        if (j) out << ",";
        out << "c" << gram.col_ids[static_cast<std::size_t>(j)];
    }
    out << "\n";
    for (int i = 0; i < gram.rows; ++i) {
        for (int j = 0; j < gram.cols; ++j) {
            if (j) out << ",";
            out << io::fmt17(gram.at(i, j));
        }
        out << "\n";
    }
    return out.str();
}

GramMatrix gram_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) {
        throw ParameterError("empty Gram CSV");
    }
    GramMatrix g;
    for (const auto& cell : io::split_csv_line(line)) {
        if (cell.empty() || cell[0] != 'c') {
            throw ParameterError("malformed Gram header cell '" + cell + "'");
        }
        g.col_ids.push_back(static_cast<int>(io::parse_int(cell.substr(1))));
    }
    g.cols = static_cast<int>(g.col_ids.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = io::split_csv_line(line);
        if (static_cast<int>(cells.size()) != g.cols) {
            throw ShapeError("Gram row has " + std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(g.cols));
        }
        for (const auto& cell : cells) {
            g.values.push_back(io::parse_double(cell));
        }
        ++g.rows;
    }
    g.row_ids.resize(static_cast<std::size_t>(g.rows));
    for (int i = 0; i < g.rows; ++i) g.row_ids[static_cast<std::size_t>(i)] = i;
    return g;
}

void save_gram(const std::filesystem::path& csv_path, const GramMatrix& gram) {
    io::write_file(csv_path, gram_to_csv(gram));
}

GramMatrix load_gram(const std::filesystem::path& csv_path) {
    return gram_from_csv(io::read_file(csv_path));
}

} // namespace qpk::pathkernel
