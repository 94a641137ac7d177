#pragma once

#include "qpk/predictor.hpp"
#include "qpk/simkernel.hpp"

#include <span>
#include <vector>

namespace qpk::qnn {

/// Shape of the layered ansatz. Parameters are shared across qubits within a
/// layer: theta[2i] drives the ZZ ring of layer i, theta[2i+1] its X
/// rotations, so param_count == 2 * layers regardless of d.
struct QnnConfig {
    int d = 2;      // qubit count == feature dimensionality
    int layers = 1; // L >= 1
    /// For d == 2 the ring {(0,1), (1,0)} names one pair twice. Default is a
    /// single ZZ gate; setting this applies it twice (doubling the effective
    /// angle) for sensitivity checks.
    bool double_zz_for_d2 = false;

    int param_count() const { return 2 * layers; }
    void validate() const;
};

/// One gate of a materialized circuit; param is the index of the shared
/// parameter that produced the angle, or -1 for data-encoding gates.
struct Gate {
    sim::PauliRotation rotation;
    int param = -1;
};

/// Common machinery for circuit-backed predictors: evaluation runs the gate
/// list on a scratch statevector; the gradient applies the parameter-shift
/// rule occurrence by occurrence (shift pi/4, unit coefficient, exact for
/// exp(-i*theta*P) with P a Pauli string) and sums shifted evaluations over
/// the occurrences of each shared parameter.
class CircuitPredictor : public Predictor {
  public:
    double predict(std::span<const double> x, std::span<const double> theta) const final;
    std::vector<double> gradient(std::span<const double> x,
                                 std::span<const double> theta) const final;

    /// The materialized gate list for given inputs (exposed for tests that
    /// cross-check occurrence-level shifts against the simulator directly).
    virtual std::vector<Gate> circuit(std::span<const double> x,
                                      std::span<const double> theta) const = 0;
    virtual int qubit_count() const = 0;
    int readout_qubit() const { return 0; }

  protected:
    void check_shapes(std::span<const double> x, std::span<const double> theta) const;
};

/// The layered model: Y-rotation feature map (one feature per qubit), then L
/// layers of [ZZ ring with angle theta[2i], X rotations with angle
/// theta[2i+1]], readout <Z> on qubit 0.
class QnnModel final : public CircuitPredictor {
  public:
    explicit QnnModel(QnnConfig cfg);

    const QnnConfig& config() const { return cfg_; }
    int input_dim() const override { return cfg_.d; }
    int param_count() const override { return cfg_.param_count(); }
    int qubit_count() const override { return cfg_.d; }

    std::vector<Gate> circuit(std::span<const double> x,
                              std::span<const double> theta) const override;

  private:
    QnnConfig cfg_;
};

/// Minimal one-qubit model with an X-rotation feature map and a single
/// X-rotation parameter; its expectation value is cos(2(theta + x)), the
/// closed form used as a golden oracle throughout the test suite.
class SingleQubitModel final : public CircuitPredictor {
  public:
    int input_dim() const override { return 1; }
    int param_count() const override { return 1; }
    int qubit_count() const override { return 1; }

    std::vector<Gate> circuit(std::span<const double> x,
                              std::span<const double> theta) const override;
};

/// Central finite differences (f(theta + h e_k) - f(theta - h e_k)) / 2h,
/// the independent oracle for the parameter-shift gradient. Requires
/// 0 < h <= 1e-3.
std::vector<double> gradient_fd(const Predictor& model, std::span<const double> x,
                                std::span<const double> theta, double h);

} // namespace qpk::qnn
