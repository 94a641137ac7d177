#pragma once

#include "qpk/optim.hpp"
#include "qpk/pathkernel.hpp"
#include "qpk/predictor.hpp"
#include "qpk/xordata.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace qpk::classical {

/// Two-hidden-layer ReLU network W3 relu(W2 relu(W1 x + b1) + b2) + b3 with h
/// units per hidden layer. Matrices are stored row-major.
struct MlpParams {
    int d = 0;
    int h = 0;
    std::vector<double> w1; // h x d
    std::vector<double> b1; // h
    std::vector<double> w2; // h x h
    std::vector<double> b2; // h
    std::vector<double> w3; // h
    double b3 = 0.0;

    static MlpParams zeros(int d, int h);
    static int parameter_count(int d, int h) { return d * h + h * h + h + 2 * h + 1; }
};

/// Hidden width used for the paper-faithful runs.
int default_hidden_units(int d); // ceil(sqrt(d))

double mlp_forward(std::span<const double> x, const MlpParams& p);

/// Flat-parameter adapter so the MLP trains through the shared optimizer.
/// Packing order: w1 row-major, b1, w2, b2, w3, b3. The gradient is exact
/// backpropagation with relu'(0) = 0.
class MlpModel : public Predictor {
  public:
    MlpModel(int d, int h) : d_(d), h_(h) {}

    int input_dim() const override { return d_; }
    int param_count() const override { return MlpParams::parameter_count(d_, h_); }
    double predict(std::span<const double> x, std::span<const double> theta) const override;
    std::vector<double> gradient(std::span<const double> x,
                                 std::span<const double> theta) const override;

    MlpParams unpack(std::span<const double> theta) const;
    std::vector<double> pack(const MlpParams& p) const;

  private:
    int d_;
    int h_;
};

struct MlpTrainResult {
    MlpParams initial;
    MlpParams trained;
    std::vector<double> losses;
};

/// Full-batch ADAM on MSE against the +-1 labels; weights drawn i.i.d.
/// N(0, 1), biases start at zero. h defaults to ceil(sqrt(d)).
MlpTrainResult mlp_train(const xordata::LabeledDataset& ds, std::uint64_t seed,
                         int epochs = 1000, double lr = 0.001, int h = 0);

double mlp_accuracy(const MlpParams& p, const std::vector<std::vector<double>>& points,
                    const std::vector<int>& labels);

/// Feature count giving the random-feature machine at least as many
/// parameters as the MLP: ceil(((d h + h^2 + h) + (2 h + 1)) / d).
int rf_feature_count(int d, int h);

struct RandomFeatureMap {
    int f = 0;
    int d = 0;
    std::vector<double> w; // f x d, i.i.d. N(0, 1)
};

RandomFeatureMap make_rf_map(int d, int h, std::uint64_t seed);

/// k(x, x') = <relu(W x), relu(W x')>.
pathkernel::GramMatrix rf_gram(const std::vector<std::vector<double>>& rows,
                               const std::vector<std::vector<double>>& cols,
                               const RandomFeatureMap& map);

enum class SelectBy { Test, Train };

struct BaselineOptions {
    int d_prime = 3;
    int pool = 10; // candidates per repeat, best one is reported
    int epochs = 1000;
    double learning_rate = 0.001;
    double train_fraction = 0.75;
    double svm_c = 1.0;
    SelectBy select_by = SelectBy::Test;
};

struct ComparisonRow {
    int d = 0;
    double eps = 0.0;
    int repeat = 0;
    double oracle_acc = 0.0;
    double nn_acc = 0.0;
    double rf_acc = 0.0;
};

struct ComparisonResult {
    std::vector<ComparisonRow> rows;
    /// One report per square random-feature Gram built along the way.
    std::vector<pathkernel::PsdReport> rf_psd_reports;
};

/// Best-of-pool MLP vs best-of-pool random-feature SVM on D_{d, d', eps, 16d}
/// across the noise grid, `repeats` times per noise level.
ComparisonResult compare_experiment(int d, const std::vector<double>& noise_grid, int repeats,
                                    std::uint64_t seed, const BaselineOptions& opts = {},
                                    int jobs = 1);

/// Mean |W1| over signal columns (< d') and junk columns (>= d'), before and
/// after training; ratio_change is the junk-to-signal ratio after divided by
/// the same ratio before (1 when nothing moved).
struct W1Shrinkage {
    double signal_mean_abs_before = 0.0;
    double junk_mean_abs_before = 0.0;
    double signal_mean_abs = 0.0; // after training
    double junk_mean_abs = 0.0;   // after training
    double ratio_change = 1.0;
};

W1Shrinkage w1_shrinkage(const MlpParams& before, const MlpParams& after, int d_prime);

} // namespace qpk::classical
