#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

namespace qpk::sim {

using cplx = std::complex<double>;

/// Largest register the dense representation accepts.
inline constexpr int kMaxQubits = 24;

enum class Axis { X, Y, Z, ZZ };

/// A rotation exp(-i * angle * P) where P is the Pauli string named by `axis`
/// on the target qubits. Note there is no implicit half-angle: the generator
/// enters the exponent with a unit coefficient.
struct PauliRotation {
    Axis axis;
    std::array<int, 2> qubits{0, 0}; // qubits[1] used only for ZZ
    double angle = 0.0;

    static PauliRotation x(int q, double angle) { return {Axis::X, {q, 0}, angle}; }
    static PauliRotation y(int q, double angle) { return {Axis::Y, {q, 0}, angle}; }
    static PauliRotation z(int q, double angle) { return {Axis::Z, {q, 0}, angle}; }
    static PauliRotation zz(int q0, int q1, double angle) { return {Axis::ZZ, {q0, q1}, angle}; }

    int target_count() const { return axis == Axis::ZZ ? 2 : 1; }
};

/// Dense amplitude vector over the computational basis. Qubit q is bit q of
/// the little-endian basis index; the register starts in |0...0>.
class Statevector {
  public:
    explicit Statevector(int n_qubits);

    int n_qubits() const { return n_qubits_; }
    std::size_t dim() const { return amps_.size(); }
    const std::vector<cplx>& amplitudes() const { return amps_; }

    /// Back to |0...0> without reallocating.
    void reset();

    /// In-place gate application (the mutating path used by hot loops).
    void apply(const PauliRotation& g);

    /// <Z> on one qubit: +1 weight where the bit is clear, -1 where set.
    double expval_z(int qubit) const;

    double norm() const;

  private:
    void apply_single(int q, cplx u00, cplx u01, cplx u10, cplx u11);
    void apply_zz(int q0, int q1, double angle);
    void check_qubit(int q) const;

    int n_qubits_;
    std::vector<cplx> amps_;
};

/// Value-semantics construction and gate application: the input state is left
/// untouched and a transformed copy is returned.
Statevector new_state(int n_qubits);
Statevector apply_rotation(Statevector state, const PauliRotation& gate);
double expval_z(const Statevector& state, int qubit);

} // namespace qpk::sim
