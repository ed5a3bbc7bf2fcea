"""Dense statevector simulation for small qubit registers.

Only the gates needed by the trainable feature maps are provided: RX, RY, RZ
rotations and CNOT. Conventions, fixed for reproducibility:

- rotations are R_A(phi) = exp(-i phi A / 2),
- qubit 0 is the leftmost tensor factor, i.e. the most significant bit of the
  amplitude index (`amplitudes.reshape([2] * q)` puts qubit k on axis k).

All operations are pure: they return a new state and never mutate inputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import cos, sin

import numpy as np

AXES = ("X", "Y", "Z")


@dataclass(frozen=True)
class StateVector:
    """Pure state of `num_qubits` qubits as 2**num_qubits complex amplitudes."""

    num_qubits: int
    amplitudes: np.ndarray

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


def zero_state(num_qubits: int) -> StateVector:
    """|0...0> on `num_qubits` qubits."""
    if num_qubits < 1:
        raise ValueError(f"num_qubits must be >= 1, got {num_qubits}")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """2x2 unitary of R_axis(angle) = exp(-i angle axis / 2)."""
    c, s = cos(angle / 2.0), sin(angle / 2.0)
    if axis == "X":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if axis == "Y":
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if axis == "Z":
        return np.array([[c - 1j * s, 0.0], [0.0, c + 1j * s]], dtype=np.complex128)
    raise ValueError(f"unknown rotation axis {axis!r}, expected one of {AXES}")


def apply_rotation(state: StateVector, axis: str, angle: float, qubit: int) -> StateVector:
    """Apply R_axis(angle) to one qubit."""
    q = state.num_qubits
    if not 0 <= qubit < q:
        raise ValueError(f"qubit {qubit} out of range for {q}-qubit state")
    mat = rotation_matrix(axis, angle)
    # axis `qubit` is the middle index after this reshape
    amps = state.amplitudes.reshape(1 << qubit, 2, -1)
    out = np.einsum("ij,ajb->aib", mat, amps)
    return StateVector(q, out.reshape(-1))


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    """Flip `target` where `control` is 1."""
    q = state.num_qubits
    if control == target:
        raise ValueError("control and target must differ")
    for name, idx in (("control", control), ("target", target)):
        if not 0 <= idx < q:
            raise ValueError(f"{name} {idx} out of range for {q}-qubit state")
    out = state.amplitudes.reshape([2] * q).copy()
    lo: list = [slice(None)] * q
    hi: list = [slice(None)] * q
    lo[control], lo[target] = 1, 0
    hi[control], hi[target] = 1, 1
    tmp = out[tuple(lo)].copy()
    out[tuple(lo)] = out[tuple(hi)]
    out[tuple(hi)] = tmp
    return StateVector(q, out.reshape(-1))


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in `a`."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(
            f"qubit counts differ: {a.num_qubits} vs {b.num_qubits}"
        )
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def z_expectation(state: StateVector, qubit: int) -> float:
    """<Z> on one qubit: P(qubit = 0) - P(qubit = 1)."""
    q = state.num_qubits
    if not 0 <= qubit < q:
        raise ValueError(f"qubit {qubit} out of range for {q}-qubit state")
    probs = np.abs(state.amplitudes.reshape(1 << qubit, 2, -1)) ** 2
    return float(probs[:, 0, :].sum() - probs[:, 1, :].sum())
