#include "qpk/optim.hpp"

#include "qpk/errors.hpp"
#include "qpk/io.hpp"
#include "qpk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qpk::optim {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kBceClip = 1e-7;

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) {
        throw ShapeError("prediction/label length mismatch: " + std::to_string(a) + " vs " +
                         std::to_string(b));
    }
    if (a == 0) {
        throw ShapeError("empty prediction vector");
    }
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

} // namespace

std::string to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "ADAM" : "GD"; }
std::string to_string(LossKind k) { return k == LossKind::Mse ? "MSE" : "BCE"; }

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "ADAM" || s == "adam") return OptimizerKind::Adam;
    if (s == "GD" || s == "gd") return OptimizerKind::Gd;
    throw ParameterError("unknown optimizer '" + s + "' (expected ADAM or GD)");
}

LossKind loss_from_string(const std::string& s) {
    if (s == "MSE" || s == "mse") return LossKind::Mse;
    if (s == "BCE" || s == "bce") return LossKind::Bce;
    throw ParameterError("unknown loss '" + s + "' (expected MSE or BCE)");
}

void TrainConfig::validate() const {
    if (epochs < 1) {
        throw ParameterError("epochs must be >= 1, got " + std::to_string(epochs));
    }
    if (!(learning_rate > 0.0)) {
        throw ParameterError("learning rate must be positive");
    }
}

double loss(std::span<const double> preds, std::span<const int> labels, LossKind kind) {
    check_lengths(preds.size(), labels.size());
    const double m = static_cast<double>(preds.size());
    double acc = 0.0;
    if (kind == LossKind::Mse) {
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const double r = preds[i] - static_cast<double>(labels[i]);
            acc += r * r;
        }
    } else {
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const double p =
                std::clamp((1.0 + preds[i]) / 2.0, kBceClip, 1.0 - kBceClip);
            acc -= labels[i] > 0 ? std::log(p) : std::log(1.0 - p);
        }
    }
    return acc / m;
}

std::vector<double> loss_gradient(std::span<const double> preds, std::span<const int> labels,
                                  LossKind kind) {
    check_lengths(preds.size(), labels.size());
    const double m = static_cast<double>(preds.size());
    std::vector<double> g(preds.size(), 0.0);
    if (kind == LossKind::Mse) {
        for (std::size_t i = 0; i < preds.size(); ++i) {
            g[i] = 2.0 * (preds[i] - static_cast<double>(labels[i])) / m;
        }
    } else {
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const double raw = (1.0 + preds[i]) / 2.0;
            if (raw <= kBceClip || raw >= 1.0 - kBceClip) {
                continue; // clip saturated; local derivative is 0
            }
            const double t = labels[i] > 0 ? 1.0 : 0.0;
            g[i] = (raw - t) / (raw * (1.0 - raw)) * 0.5 / m;
        }
    }
    return g;
}

std::vector<double> init_params(int length, std::uint64_t seed) {
    if (length < 1) {
        throw ShapeError("parameter vector length must be >= 1, got " + std::to_string(length));
    }
    rng::Stream stream(seed);
    std::vector<double> v(static_cast<std::size_t>(length));
    for (double& x : v) {
        x = stream.next_gaussian();
    }
    return v;
}

std::pair<AdamState, std::vector<double>> adam_step(AdamState state, std::vector<double> theta,
                                                    std::span<const double> grad, double lr) {
    if (state.m.size() != theta.size() || grad.size() != theta.size()) {
        throw ShapeError("adam_step: state/theta/grad lengths disagree");
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * grad[i];
        state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        theta[i] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEps);
    }
    return {std::move(state), std::move(theta)};
}

ParameterTrajectory train(const std::vector<std::vector<double>>& points,
                          const std::vector<int>& labels, const Predictor& model,
                          const TrainConfig& cfg) {
    return train(points, labels, model, cfg, init_params(model.param_count(), cfg.seed));
}

ParameterTrajectory train(const std::vector<std::vector<double>>& points,
                          const std::vector<int>& labels, const Predictor& model,
                          const TrainConfig& cfg, std::vector<double> theta) {
    cfg.validate();
    if (points.empty()) {
        throw ShapeError("training set is empty");
    }
    if (points.size() != labels.size()) {
        throw ShapeError("points/labels length mismatch");
    }
    for (const auto& p : points) {
        if (static_cast<int>(p.size()) != model.input_dim()) {
            throw ShapeError("data point dimensionality " + std::to_string(p.size()) +
                             " does not match model input " + std::to_string(model.input_dim()));
        }
    }
    if (static_cast<int>(theta.size()) != model.param_count()) {
        throw ShapeError("initial parameter vector has wrong length");
    }

    const std::size_t n = points.size();
    ParameterTrajectory traj;
    traj.config = cfg;
    traj.thetas.reserve(static_cast<std::size_t>(cfg.epochs) + 1);
    traj.losses.reserve(static_cast<std::size_t>(cfg.epochs) + 1);

    auto batch_predict = [&](const std::vector<double>& th) {
        std::vector<double> preds(n);
        for (std::size_t i = 0; i < n; ++i) {
            preds[i] = model.predict(points[i], th);
        }
        return preds;
    };

    std::vector<double> preds = batch_predict(theta);
    traj.thetas.push_back(theta);
    traj.losses.push_back(loss(preds, labels, cfg.loss));
    if (!std::isfinite(traj.losses.back())) {
        throw TrainingDivergedError("non-finite loss at initialization", std::move(traj));
    }

    AdamState adam(theta.size());
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const std::vector<double> dl = loss_gradient(preds, labels, cfg.loss);
        std::vector<double> grad(theta.size(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (dl[i] == 0.0) continue;
            const std::vector<double> gi = model.gradient(points[i], theta);
            for (std::size_t k = 0; k < grad.size(); ++k) {
                grad[k] += dl[i] * gi[k];
            }
        }
        if (!all_finite(grad)) {
            throw TrainingDivergedError("non-finite gradient at epoch " + std::to_string(epoch),
                                        std::move(traj));
        }

        if (cfg.optimizer == OptimizerKind::Adam) {
            std::tie(adam, theta) = adam_step(std::move(adam), std::move(theta), grad,
                                              cfg.learning_rate);
        } else {
            for (std::size_t k = 0; k < theta.size(); ++k) {
                theta[k] -= cfg.learning_rate * grad[k];
            }
        }

        preds = batch_predict(theta);
        const double l = loss(preds, labels, cfg.loss);
        if (!std::isfinite(l) || !all_finite(theta)) {
            throw TrainingDivergedError("non-finite state at epoch " + std::to_string(epoch),
                                        std::move(traj));
        }
        traj.thetas.push_back(theta);
        traj.losses.push_back(l);
    }
    return traj;
}

double param_deviation(const ParameterTrajectory& traj, int epoch) {
    if (epoch < 0 || epoch >= static_cast<int>(traj.thetas.size())) {
        throw IndexError("epoch " + std::to_string(epoch) + " outside trajectory of length " +
                         std::to_string(traj.thetas.size()));
    }
    const auto& t0 = traj.thetas.front();
    const auto& tn = traj.thetas[static_cast<std::size_t>(epoch)];
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < t0.size(); ++k) {
        const double d = tn[k] - t0[k];
        num += d * d;
        den += t0[k] * t0[k];
    }
    if (den == 0.0) {
        throw DegenerateInitializationError("||theta(0)|| is zero; deviation undefined");
    }
    return std::sqrt(num) / std::sqrt(den);
}

std::string trajectory_to_csv(const ParameterTrajectory& traj) {
    std::ostringstream out;
    const std::size_t p = traj.thetas.empty() ? 0 : traj.thetas.front().size();
    out << "epoch,loss";
    for (std::size_t k = 0; k < p; ++k) {
        out << ",theta_" << k;
    }
    out << "\n";
    for (std::size_t t = 0; t < traj.thetas.size(); ++t) {
        out << t << "," << io::fmt17(traj.losses[t]);
        for (const double v : traj.thetas[t]) {
            out << "," << io::fmt17(v);
        }
        out << "\n";
    }
    return out.str();
}

ParameterTrajectory trajectory_from_csv(const std::string& csv) {
    ParameterTrajectory traj;
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) {
        throw ParameterError("empty trajectory CSV");
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = io::split_csv_line(line);
        if (cells.size() < 3) {
            throw ParameterError("malformed trajectory row: '" + line + "'");
        }
        traj.losses.push_back(io::parse_double(cells[1]));
        std::vector<double> theta;
        theta.reserve(cells.size() - 2);
        for (std::size_t k = 2; k < cells.size(); ++k) {
            theta.push_back(io::parse_double(cells[k]));
        }
        traj.thetas.push_back(std::move(theta));
    }
    return traj;
}

void save_trajectory(const std::filesystem::path& csv_path, const ParameterTrajectory& traj) {
    io::write_file(csv_path, trajectory_to_csv(traj));
}

ParameterTrajectory load_trajectory(const std::filesystem::path& csv_path) {
    return trajectory_from_csv(io::read_file(csv_path));
}

} // namespace qpk::optim
