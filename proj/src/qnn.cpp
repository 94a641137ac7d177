#include "qpk/qnn.hpp"

#include "qpk/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace qpk::qnn {

namespace {

constexpr double kShift = std::numbers::pi / 4.0;

double run_tail(sim::Statevector state, const std::vector<Gate>& gates, std::size_t first,
                int readout) {
    for (std::size_t k = first; k < gates.size(); ++k) {
        state.apply(gates[k].rotation);
    }
    return state.expval_z(readout);
}

} // namespace

void QnnConfig::validate() const {
    if (d < 1 || d > sim::kMaxQubits) {
        throw ParameterError("qubit count d must be in [1, " + std::to_string(sim::kMaxQubits) +
                             "], got " + std::to_string(d));
    }
    if (layers < 1) {
        throw ParameterError("layer count must be >= 1, got " + std::to_string(layers));
    }
}

void CircuitPredictor::check_shapes(std::span<const double> x,
                                    std::span<const double> theta) const {
    if (static_cast<int>(x.size()) != input_dim()) {
        throw ShapeError("input has " + std::to_string(x.size()) + " features, model expects " +
                         std::to_string(input_dim()));
    }
    if (static_cast<int>(theta.size()) != param_count()) {
        throw ShapeError("parameter vector has " + std::to_string(theta.size()) +
                         " entries, model expects " + std::to_string(param_count()));
    }
}

double CircuitPredictor::predict(std::span<const double> x,
                                 std::span<const double> theta) const {
    check_shapes(x, theta);
    const std::vector<Gate> gates = circuit(x, theta);
    sim::Statevector state(qubit_count());
    for (const Gate& g : gates) {
        state.apply(g.rotation);
    }
    return state.expval_z(readout_qubit());
}

std::vector<double> CircuitPredictor::gradient(std::span<const double> x,
                                               std::span<const double> theta) const {
    check_shapes(x, theta);
    const std::vector<Gate> gates = circuit(x, theta);
    std::vector<double> grad(static_cast<std::size_t>(param_count()), 0.0);

    // Walk the circuit once, keeping the state *before* gate k; each shifted
    // evaluation then only replays the tail of the circuit.
    sim::Statevector prefix(qubit_count());
    for (std::size_t k = 0; k < gates.size(); ++k) {
        const Gate& g = gates[k];
        if (g.param >= 0) {
            sim::PauliRotation plus = g.rotation;
            plus.angle += kShift;
            sim::PauliRotation minus = g.rotation;
            minus.angle -= kShift;

            sim::Statevector shifted = prefix;
            shifted.apply(plus);
            const double f_plus = run_tail(std::move(shifted), gates, k + 1, readout_qubit());

            shifted = prefix;
            shifted.apply(minus);
            const double f_minus = run_tail(std::move(shifted), gates, k + 1, readout_qubit());

            grad[static_cast<std::size_t>(g.param)] += f_plus - f_minus;
        }
        prefix.apply(g.rotation);
    }
    return grad;
}

QnnModel::QnnModel(QnnConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::vector<Gate> QnnModel::circuit(std::span<const double> x,
                                    std::span<const double> theta) const {
    const int d = cfg_.d;
    std::vector<Gate> gates;
    gates.reserve(static_cast<std::size_t>(d) * (1 + 2 * static_cast<std::size_t>(cfg_.layers)));

    for (int j = 0; j < d; ++j) {
        gates.push_back({sim::PauliRotation::y(j, x[static_cast<std::size_t>(j)]), -1});
    }
    for (int layer = 0; layer < cfg_.layers; ++layer) {
        const int p_zz = 2 * layer;
        const int p_x = 2 * layer + 1;
        const double a_zz = theta[static_cast<std::size_t>(p_zz)];
        const double a_x = theta[static_cast<std::size_t>(p_x)];
        if (d >= 3 || (d == 2 && cfg_.double_zz_for_d2)) {
            for (int j = 0; j < d; ++j) {
                gates.push_back({sim::PauliRotation::zz(j, (j + 1) % d, a_zz), p_zz});
            }
        } else if (d == 2) {
            gates.push_back({sim::PauliRotation::zz(0, 1, a_zz), p_zz});
        }
        // d == 1: the ring is empty; theta[2i] is present but inert.
        for (int j = 0; j < d; ++j) {
            gates.push_back({sim::PauliRotation::x(j, a_x), p_x});
        }
    }
    return gates;
}

std::vector<Gate> SingleQubitModel::circuit(std::span<const double> x,
                                            std::span<const double> theta) const {
    return {
        {sim::PauliRotation::x(0, x[0]), -1},
        {sim::PauliRotation::x(0, theta[0]), 0},
    };
}

std::vector<double> gradient_fd(const Predictor& model, std::span<const double> x,
                                std::span<const double> theta, double h) {
    if (!(h > 0.0) || h > 1e-3) {
        throw ParameterError("finite-difference step must satisfy 0 < h <= 1e-3");
    }
    std::vector<double> shifted(theta.begin(), theta.end());
    std::vector<double> grad(theta.size(), 0.0);
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double base = shifted[k];
        shifted[k] = base + h;
        const double f_plus = model.predict(x, shifted);
        shifted[k] = base - h;
        const double f_minus = model.predict(x, shifted);
        shifted[k] = base;
        grad[k] = (f_plus - f_minus) / (2.0 * h);
    }
    return grad;
}

} // namespace qpk::qnn
