#pragma once

#include "qpk/optim.hpp"
#include "qpk/predictor.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace qpk::pathkernel {

enum class KernelKind { Qntk, Qpk, EffectiveQpk, Rf };

std::string to_string(KernelKind k);
KernelKind kernel_from_string(const std::string& s);

/// A real kernel matrix with data-point identifiers and a free-form
/// provenance note (trajectory hash, epoch range, ...). Row-major storage.
struct GramMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;
    std::vector<int> row_ids;
    std::vector<int> col_ids;
    KernelKind kind = KernelKind::Qntk;
    std::string provenance;

    double at(int i, int j) const {
        return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
                      static_cast<std::size_t>(j)];
    }
    double& at(int i, int j) {
        return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
                      static_cast<std::size_t>(j)];
    }
    bool square() const { return rows == cols; }

    /// Sub-block [r0, r1) x [c0, c1), keeping ids and provenance.
    GramMatrix block(int r0, int r1, int c0, int c1) const;
};

/// Tangent kernel at a fixed parameter point: the inner product of the two
/// parameter gradients of the predictor.
double qntk(std::span<const double> x, std::span<const double> x_prime,
            std::span<const double> theta, const Predictor& model);

/// Entrywise tangent-kernel Gram. Gradients are evaluated once per distinct
/// data point (rows + cols evaluations, reused across entries); pass the same
/// container as rows and cols to share the row gradients.
GramMatrix qntk_gram(const std::vector<std::vector<double>>& rows,
                     const std::vector<std::vector<double>>& cols,
                     std::span<const double> theta, const Predictor& model, int jobs = 1);

/// Path kernel: the mean of per-epoch tangent-kernel Grams over
/// t = 0..T-1 of the recorded trajectory (the final parameter vector is
/// excluded unless include_final is set). The mean is accumulated
/// incrementally in epoch order, so a frozen trajectory reproduces the
/// tangent Gram bit for bit and the job count never changes the result.
GramMatrix qpk_gram(const std::vector<std::vector<double>>& rows,
                    const std::vector<std::vector<double>>& cols,
                    const optim::ParameterTrajectory& traj, const Predictor& model,
                    bool include_final = false, int jobs = 1);

/// Path kernel restricted to epochs that moved: epoch 0 is always kept, and a
/// later epoch enters the mean only if its parameter displacement since the
/// last kept epoch is at least rel_tol in relative norm. rel_tol = 0 keeps
/// every epoch and reproduces qpk_gram exactly.
GramMatrix effective_qpk_gram(const std::vector<std::vector<double>>& rows,
                              const std::vector<std::vector<double>>& cols,
                              const optim::ParameterTrajectory& traj, const Predictor& model,
                              double rel_tol, bool include_final = false, int jobs = 1);

/// Spectrum extremes of (G + G^T)/2 and the worst asymmetry |G - G^T|.
struct PsdReport {
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    double symmetric_defect = 0.0;

    /// Mercer thresholds used across the test suites.
    bool mercer_ok() const {
        return symmetric_defect < 1e-10 &&
               min_eigenvalue >= -1e-8 * std::max(max_eigenvalue, 0.0);
    }
};

PsdReport psd_report(const GramMatrix& gram);

/// CSV persistence: header row with col_ids, then rows x cols values at 17
/// significant digits. Row ids, kind and provenance travel in the harness
/// sidecar.
std::string gram_to_csv(const GramMatrix& gram);
GramMatrix gram_from_csv(const std::string& csv);
void save_gram(const std::filesystem::path& csv_path, const GramMatrix& gram);
GramMatrix load_gram(const std::filesystem::path& csv_path);

} // namespace qpk::pathkernel
