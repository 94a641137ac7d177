#include "qpk/simkernel.hpp"

#include "qpk/errors.hpp"

#include <cmath>
#include <string>

namespace qpk::sim {

Statevector::Statevector(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw CapacityError("n_qubits must be in [1, " + std::to_string(kMaxQubits) +
                            "], got " + std::to_string(n_qubits));
    }
    amps_.assign(std::size_t{1} << n_qubits, cplx{0.0, 0.0});
    amps_[0] = cplx{1.0, 0.0};
}

void Statevector::reset() {
    std::fill(amps_.begin(), amps_.end(), cplx{0.0, 0.0});
    amps_[0] = cplx{1.0, 0.0};
}

void Statevector::check_qubit(int q) const {
    if (q < 0 || q >= n_qubits_) {
        throw IndexError("qubit index " + std::to_string(q) + " out of range for " +
                         std::to_string(n_qubits_) + " qubits");
    }
}

void Statevector::apply_single(int q, cplx u00, cplx u01, cplx u10, cplx u11) {
    const std::size_t stride = std::size_t{1} << q;
    const std::size_t dim = amps_.size();
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
            const cplx a0 = amps_[i];
            const cplx a1 = amps_[i + stride];
            amps_[i] = u00 * a0 + u01 * a1;
            amps_[i + stride] = u10 * a0 + u11 * a1;
        }
    }
}

void Statevector::apply_zz(int q0, int q1, double angle) {
    // Diagonal gate: phase exp(-i*angle) where the two bits agree,
    // exp(+i*angle) where they differ.
    const cplx same{std::cos(angle), -std::sin(angle)};
    const cplx diff = std::conj(same);
    const std::size_t m0 = std::size_t{1} << q0;
    const std::size_t m1 = std::size_t{1} << q1;
    const std::size_t dim = amps_.size();
    for (std::size_t i = 0; i < dim; ++i) {
        const bool b0 = (i & m0) != 0;
        const bool b1 = (i & m1) != 0;
        amps_[i] *= (b0 == b1) ? same : diff;
    }
}

void Statevector::apply(const PauliRotation& g) {
    const double c = std::cos(g.angle);
    const double s = std::sin(g.angle);
    switch (g.axis) {
    case Axis::X:
        check_qubit(g.qubits[0]);
        apply_single(g.qubits[0], cplx{c, 0}, cplx{0, -s}, cplx{0, -s}, cplx{c, 0});
        break;
    case Axis::Y:
        check_qubit(g.qubits[0]);
        apply_single(g.qubits[0], cplx{c, 0}, cplx{-s, 0}, cplx{s, 0}, cplx{c, 0});
        break;
    case Axis::Z:
        check_qubit(g.qubits[0]);
        apply_single(g.qubits[0], cplx{c, -s}, cplx{0, 0}, cplx{0, 0}, cplx{c, s});
        break;
    case Axis::ZZ:
        check_qubit(g.qubits[0]);
        check_qubit(g.qubits[1]);
        if (g.qubits[0] == g.qubits[1]) {
            throw IndexError("ZZ rotation requires two distinct qubits, got " +
                             std::to_string(g.qubits[0]) + " twice");
        }
        apply_zz(g.qubits[0], g.qubits[1], g.angle);
        break;
    }
}

double Statevector::expval_z(int qubit) const {
    check_qubit(qubit);
    const std::size_t mask = std::size_t{1} << qubit;
    double acc = 0.0;
    for (std::size_t i = 0; i < amps_.size(); ++i) {
        const double p = std::norm(amps_[i]);
        acc += (i & mask) ? -p : p;
    }
    return acc;
}

double Statevector::norm() const {
    double acc = 0.0;
    for (const cplx& a : amps_) {
        acc += std::norm(a);
    }
    return std::sqrt(acc);
}

Statevector new_state(int n_qubits) { return Statevector(n_qubits); }

Statevector apply_rotation(Statevector state, const PauliRotation& gate) {
    state.apply(gate);
    return state;
}

double expval_z(const Statevector& state, int qubit) { return state.expval_z(qubit); }

} // namespace qpk::sim
