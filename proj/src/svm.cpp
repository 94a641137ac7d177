#include "qpk/svm.hpp"

#include "qpk/errors.hpp"
#include "qpk/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace qpk::svm {

namespace {

constexpr double kAlphaFloor = 1e-9; // smaller alphas truncate to 0
constexpr double kStepEps = 1e-12;

struct Smo {
    const pathkernel::GramMatrix& k;
    const std::vector<int>& y;
    double c;
    double tol;
    int n;
    std::vector<double> alpha;
    std::vector<double> error; // f(i) - y_i, kept up to date after each step
    double b = 0.0;

    Smo(const pathkernel::GramMatrix& gram, const std::vector<int>& labels, double c_, double tol_)
        : k(gram), y(labels), c(c_), tol(tol_), n(gram.rows),
          alpha(static_cast<std::size_t>(gram.rows), 0.0),
          error(static_cast<std::size_t>(gram.rows)) {
        for (int i = 0; i < n; ++i) {
            error[static_cast<std::size_t>(i)] = -static_cast<double>(y[static_cast<std::size_t>(i)]);
        }
    }

    double& a(int i) { return alpha[static_cast<std::size_t>(i)]; }
    double e(int i) const { return error[static_cast<std::size_t>(i)]; }
    double yi(int i) const { return static_cast<double>(y[static_cast<std::size_t>(i)]); }
    bool bound(int i) { return a(i) <= 0.0 || a(i) >= c; }

    bool take_step(int i1, int i2) {
        if (i1 == i2) return false;
        const double a1_old = a(i1);
        const double a2_old = a(i2);
        const double y1 = yi(i1);
        const double y2 = yi(i2);
        const double e1 = e(i1);
        const double e2 = e(i2);
        const double s = y1 * y2;

        double lo, hi;
        if (s < 0.0) {
            lo = std::max(0.0, a2_old - a1_old);
            hi = std::min(c, c + a2_old - a1_old);
        } else {
            lo = std::max(0.0, a1_old + a2_old - c);
            hi = std::min(c, a1_old + a2_old);
        }
        if (lo >= hi) return false;

        const double k11 = k.at(i1, i1);
        const double k12 = k.at(i1, i2);
        const double k22 = k.at(i2, i2);
        const double eta = k11 + k22 - 2.0 * k12;

        double a2_new;
        if (eta > 0.0) {
            a2_new = std::clamp(a2_old + y2 * (e1 - e2) / eta, lo, hi);
        } else {
            // Flat or concave direction: evaluate the objective at both ends.
            const double f1 = y1 * (e1 + b) - a1_old * k11 - s * a2_old * k12;
            const double f2 = y2 * (e2 + b) - s * a1_old * k12 - a2_old * k22;
            const double l1 = a1_old + s * (a2_old - lo);
            const double h1 = a1_old + s * (a2_old - hi);
            const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 +
                                  s * lo * l1 * k12;
            const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 +
                                  s * hi * h1 * k12;
            if (obj_lo < obj_hi - kStepEps) {
                a2_new = lo;
            } else if (obj_lo > obj_hi + kStepEps) {
                a2_new = hi;
            } else {
                return false;
            }
        }
        if (std::abs(a2_new - a2_old) < kStepEps * (a2_new + a2_old + kStepEps)) {
            return false;
        }
        const double a1_new = a1_old + s * (a2_old - a2_new);

        const double b1 = b - e1 - y1 * (a1_new - a1_old) * k11 - y2 * (a2_new - a2_old) * k12;
        const double b2 = b - e2 - y1 * (a1_new - a1_old) * k12 - y2 * (a2_new - a2_old) * k22;
        double b_new;
        if (a1_new > 0.0 && a1_new < c) {
            b_new = b1;
        } else if (a2_new > 0.0 && a2_new < c) {
            b_new = b2;
        } else {
            b_new = 0.5 * (b1 + b2);
        }

        const double d1 = y1 * (a1_new - a1_old);
        const double d2 = y2 * (a2_new - a2_old);
        for (int j = 0; j < n; ++j) {
            error[static_cast<std::size_t>(j)] += d1 * k.at(i1, j) + d2 * k.at(i2, j) + (b_new - b);
        }
        a(i1) = a1_new;
        a(i2) = a2_new;
        b = b_new;
        return true;
    }

    int examine(int i2) {
        const double y2 = yi(i2);
        const double e2 = e(i2);
        const double r2 = e2 * y2;
        if (!((r2 < -tol && a(i2) < c) || (r2 > tol && a(i2) > 0.0))) {
            return 0;
        }
        // Heuristic 1: the non-bound point with the largest |E1 - E2|.
        int best = -1;
        double best_gap = -1.0;
        for (int i = 0; i < n; ++i) {
            if (bound(i)) continue;
            const double gap = std::abs(e(i) - e2);
            if (gap > best_gap) {
                best_gap = gap;
                best = i;
            }
        }
        if (best >= 0 && take_step(best, i2)) return 1;
        // Heuristic 2: sweep non-bound points from a fixed offset.
        for (int off = 0; off < n; ++off) {
            const int i = (i2 + 1 + off) % n;
            if (bound(i)) continue;
            if (take_step(i, i2)) return 1;
        }
        // Heuristic 3: sweep everything.
        for (int off = 0; off < n; ++off) {
            const int i = (i2 + 1 + off) % n;
            if (take_step(i, i2)) return 1;
        }
        return 0;
    }

    void solve(int max_passes) {
        bool examine_all = true;
        int changed = 0;
        for (int pass = 0; pass < max_passes; ++pass) {
            changed = 0;
            for (int i = 0; i < n; ++i) {
                if (examine_all || !bound(i)) {
                    changed += examine(i);
                }
            }
            if (examine_all) {
                if (changed == 0) break; // KKT satisfied everywhere within tol
                examine_all = false;
            } else if (changed == 0) {
                examine_all = true;
            }
        }
    }
};

} // namespace

double SvmModel::dual_objective(const pathkernel::GramMatrix& gram) const {
    const int n = static_cast<int>(alpha.size());
    double obj = 0.0;
    for (int i = 0; i < n; ++i) {
        obj += alpha[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < n; ++i) {
        if (alpha[static_cast<std::size_t>(i)] == 0.0) continue;
        for (int j = 0; j < n; ++j) {
            obj -= 0.5 * alpha[static_cast<std::size_t>(i)] * alpha[static_cast<std::size_t>(j)] *
                   labels[static_cast<std::size_t>(i)] * labels[static_cast<std::size_t>(j)] *
                   gram.at(i, j);
        }
    }
    return obj;
}

SvmModel svm_train(const pathkernel::GramMatrix& gram, const std::vector<int>& labels, double C,
                   double tol, int max_passes) {
    if (!gram.square()) {
        throw ShapeError("svm_train requires a square Gram, got " + std::to_string(gram.rows) +
                         "x" + std::to_string(gram.cols));
    }
    if (static_cast<int>(labels.size()) != gram.rows) {
        throw ShapeError("label count does not match Gram size");
    }
    if (!(C > 0.0)) {
        throw ParameterError("C must be positive");
    }
    bool has_pos = false;
    bool has_neg = false;
    for (const int y : labels) {
        if (y == 1) has_pos = true;
        else if (y == -1) has_neg = true;
        else throw ParameterError("labels must be +1 or -1, got " + std::to_string(y));
    }
    if (!has_pos || !has_neg) {
        throw DegenerateLabelsError("training labels contain a single class");
    }
    double defect = 0.0;
    for (int i = 0; i < gram.rows; ++i) {
        for (int j = i + 1; j < gram.cols; ++j) {
            defect = std::max(defect, std::abs(gram.at(i, j) - gram.at(j, i)));
        }
    }
    if (defect > 1e-8) {
        throw ParameterError("Gram asymmetric beyond tolerance: defect " + io::fmtg(defect));
    }

    Smo smo(gram, labels, C, tol);
    smo.solve(max_passes);

    SvmModel model;
    model.alpha = std::move(smo.alpha);
    model.bias = smo.b;
    model.labels = labels;
    model.C = C;
    for (int i = 0; i < gram.rows; ++i) {
        if (model.alpha[static_cast<std::size_t>(i)] < kAlphaFloor) {
            model.alpha[static_cast<std::size_t>(i)] = 0.0;
        } else {
            model.support_indices.push_back(i);
        }
    }
    return model;
}

std::vector<double> decision_values(const SvmModel& model,
                                    const pathkernel::GramMatrix& cross_gram) {
    if (cross_gram.cols != static_cast<int>(model.alpha.size())) {
        throw ShapeError("cross Gram has " + std::to_string(cross_gram.cols) +
                         " columns, model was trained on " + std::to_string(model.alpha.size()) +
                         " points");
    }
    std::vector<double> out(static_cast<std::size_t>(cross_gram.rows), 0.0);
    for (int i = 0; i < cross_gram.rows; ++i) {
        double f = model.bias;
        for (const int j : model.support_indices) {
            f += model.alpha[static_cast<std::size_t>(j)] *
                 static_cast<double>(model.labels[static_cast<std::size_t>(j)]) * cross_gram.at(i, j);
        }
        out[static_cast<std::size_t>(i)] = f;
    }
    return out;
}

std::vector<int> svm_predict(const SvmModel& model, const pathkernel::GramMatrix& cross_gram) {
    const std::vector<double> f = decision_values(model, cross_gram);
    std::vector<int> preds(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        preds[i] = f[i] < 0.0 ? -1 : +1;
    }
    return preds;
}

double accuracy(std::span<const int> preds, std::span<const int> labels) {
    if (preds.size() != labels.size() || preds.empty()) {
        throw ShapeError("accuracy needs equal nonempty prediction/label vectors");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::string model_to_json(const SvmModel& model) {
    nlohmann::json j;
    j["alpha"] = model.alpha;
    j["bias"] = model.bias;
    j["support_indices"] = model.support_indices;
    j["labels"] = model.labels;
    j["C"] = model.C;
    j["provenance"] = model.provenance;
    return j.dump(2) + "\n";
}

SvmModel model_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    SvmModel model;
    model.alpha = j.at("alpha").get<std::vector<double>>();
    model.bias = j.at("bias").get<double>();
    model.support_indices = j.at("support_indices").get<std::vector<int>>();
    model.labels = j.at("labels").get<std::vector<int>>();
    model.C = j.at("C").get<double>();
    model.provenance = j.value("provenance", "");
    return model;
}

void save_model(const std::filesystem::path& path, const SvmModel& model) {
    io::write_file(path, model_to_json(model));
}

SvmModel load_model(const std::filesystem::path& path) {
    return model_from_json(io::read_file(path));
}

} // namespace qpk::svm
