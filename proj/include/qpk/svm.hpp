#pragma once

#include "qpk/pathkernel.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace qpk::svm {

/// Dual solution of a binary kernel SVM trained on a precomputed Gram.
struct SvmModel {
    std::vector<double> alpha; // one per training point, 0 <= alpha_i <= C
    double bias = 0.0;
    std::vector<int> support_indices; // indices with alpha_i > 0 (after flooring)
    std::vector<int> labels;          // training labels, +-1
    double C = 1.0;
    std::string provenance; // kernel hash etc., set by the caller

    /// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
    double dual_objective(const pathkernel::GramMatrix& gram) const;
};

/// Sequential minimal optimization on the dual with a precomputed kernel.
/// Deterministic: working-pair selection uses the max-|E1-E2| heuristic with
/// fixed-order sweeps, no randomization. Requires a square Gram, symmetric
/// within 1e-8, and both classes present.
SvmModel svm_train(const pathkernel::GramMatrix& gram, const std::vector<int>& labels,
                   double C = 1.0, double tol = 1e-3, int max_passes = 200);

/// Decision values for test rows: f_j = sum_i alpha_i y_i G_ji + b, where
/// cross_gram is test x train.
std::vector<double> decision_values(const SvmModel& model,
                                    const pathkernel::GramMatrix& cross_gram);

/// sign of the decision value, with sign(0) defined as +1.
std::vector<int> svm_predict(const SvmModel& model, const pathkernel::GramMatrix& cross_gram);

double accuracy(std::span<const int> preds, std::span<const int> labels);

/// JSON persistence (alpha, bias, support indices, labels, C, provenance).
std::string model_to_json(const SvmModel& model);
SvmModel model_from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const SvmModel& model);
SvmModel load_model(const std::filesystem::path& path);

} // namespace qpk::svm
