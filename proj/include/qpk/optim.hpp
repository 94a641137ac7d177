#pragma once

#include "qpk/predictor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpk::optim {

enum class OptimizerKind { Adam, Gd };
enum class LossKind { Mse, Bce };

std::string to_string(OptimizerKind k);
std::string to_string(LossKind k);
OptimizerKind optimizer_from_string(const std::string& s);
LossKind loss_from_string(const std::string& s);

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::Adam;
    double learning_rate = 0.1;
    int epochs = 1000;
    LossKind loss = LossKind::Mse;
    std::uint64_t seed = 0;

    void validate() const;
};

/// The recorded parameter path: thetas[t] and losses[t] for t = 0..epochs,
/// where index 0 is the initialization.
struct ParameterTrajectory {
    std::vector<std::vector<double>> thetas;
    std::vector<double> losses;
    TrainConfig config;

    int epochs() const { return static_cast<int>(thetas.size()) - 1; }
};

/// Aborted training; carries whatever prefix of the trajectory was finite.
class TrainingDivergedError : public std::runtime_error {
  public:
    TrainingDivergedError(const std::string& msg, ParameterTrajectory partial)
        : std::runtime_error(msg), partial_trajectory(std::move(partial)) {}

    ParameterTrajectory partial_trajectory;
};

/// MSE = mean (pred - label)^2. BCE maps pred in [-1,1] to a probability
/// p = (1 + pred)/2 clipped to [1e-7, 1 - 1e-7] and labels +1/-1 to 1/0.
double loss(std::span<const double> preds, std::span<const int> labels, LossKind kind);

/// d loss / d pred_i, including the 1/m factor of the mean. Entries where the
/// BCE clip saturates are 0.
std::vector<double> loss_gradient(std::span<const double> preds, std::span<const int> labels,
                                  LossKind kind);

/// i.i.d. standard normal entries, deterministic per seed (see qpk/rng.hpp
/// for the exact draw algorithm).
std::vector<double> init_params(int length, std::uint64_t seed);

/// Bias-corrected ADAM with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long t = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

std::pair<AdamState, std::vector<double>> adam_step(AdamState state, std::vector<double> theta,
                                                    std::span<const double> grad, double lr);

/// Full-batch training of `model` on (points, labels), recording theta and
/// loss at every epoch including epoch 0. The three-argument overload draws
/// theta(0) from cfg.seed via init_params.
ParameterTrajectory train(const std::vector<std::vector<double>>& points,
                          const std::vector<int>& labels, const Predictor& model,
                          const TrainConfig& cfg);
ParameterTrajectory train(const std::vector<std::vector<double>>& points,
                          const std::vector<int>& labels, const Predictor& model,
                          const TrainConfig& cfg, std::vector<double> theta0);

/// ||theta(n) - theta(0)|| / ||theta(0)||.
double param_deviation(const ParameterTrajectory& traj, int epoch);

/// CSV persistence: header `epoch,loss,theta_0,...,theta_{P-1}`, one row per
/// epoch, 17-significant-digit floats (exact round trip).
std::string trajectory_to_csv(const ParameterTrajectory& traj);
ParameterTrajectory trajectory_from_csv(const std::string& csv);
void save_trajectory(const std::filesystem::path& csv_path, const ParameterTrajectory& traj);
ParameterTrajectory load_trajectory(const std::filesystem::path& csv_path);

} // namespace qpk::optim
