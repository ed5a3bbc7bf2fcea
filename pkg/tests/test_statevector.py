"""Tests for the dense statevector core."""
import numpy as np
import pytest

from pegasos_qka.statevector import (
    apply_cnot,
    apply_rotation,
    inner_product,
    z_expectation,
    zero_state,
)

RNG = np.random.default_rng(7)


def random_state(num_qubits, rng):
    """Haar-ish normalized random state, independent of the gate code."""
    amps = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
    amps /= np.linalg.norm(amps)
    state = zero_state(num_qubits)
    return type(state)(num_qubits, amps)


def random_gate_sequence(state, rng, length=12):
    for _ in range(length):
        if state.num_qubits > 1 and rng.random() < 0.3:
            control, target = rng.choice(state.num_qubits, size=2, replace=False)
            state = apply_cnot(state, int(control), int(target))
        else:
            axis = rng.choice(["X", "Y", "Z"])
            qubit = int(rng.integers(state.num_qubits))
            state = apply_rotation(state, axis, float(rng.uniform(-np.pi, np.pi)), qubit)
    return state


# --- zero_state ---

def test_zero_state_one_qubit():
    assert np.array_equal(zero_state(1).amplitudes, [1, 0])


def test_zero_state_two_qubits():
    assert np.array_equal(zero_state(2).amplitudes, [1, 0, 0, 0])


def test_zero_state_three_qubits_norm():
    state = zero_state(3)
    assert state.amplitudes.shape == (8,)
    assert abs(state.norm_squared() - 1.0) < 1e-10


def test_zero_state_rejects_nonpositive():
    with pytest.raises(ValueError):
        zero_state(0)


# --- rotations ---

def test_ry_half_pi_on_zero():
    state = apply_rotation(zero_state(1), "Y", np.pi / 2, 0)
    expected = [np.cos(np.pi / 4), np.sin(np.pi / 4)]
    assert np.allclose(state.amplitudes, expected, atol=1e-12)


def test_rx_pi_on_zero():
    state = apply_rotation(zero_state(1), "X", np.pi, 0)
    assert np.allclose(state.amplitudes, [0, -1j], atol=1e-12)


def test_rz_zero_is_identity():
    for q in range(3):
        state = random_state(3, np.random.default_rng(q))
        rotated = apply_rotation(state, "Z", 0.0, q)
        assert np.allclose(rotated.amplitudes, state.amplitudes, atol=1e-12)


def test_rotation_rejects_bad_qubit():
    with pytest.raises(ValueError):
        apply_rotation(zero_state(2), "X", 0.1, 2)
    with pytest.raises(ValueError):
        apply_rotation(zero_state(2), "Q", 0.1, 0)


@pytest.mark.parametrize("axis", ["X", "Y", "Z"])
def test_rotation_additivity(axis):
    rng = np.random.default_rng(11)
    for _ in range(5):
        state = random_state(2, rng)
        a, b = rng.uniform(-np.pi, np.pi, size=2)
        two_step = apply_rotation(apply_rotation(state, axis, a, 1), axis, b, 1)
        one_step = apply_rotation(state, axis, a + b, 1)
        assert np.allclose(two_step.amplitudes, one_step.amplitudes, atol=1e-10)


@pytest.mark.parametrize("axis", ["X", "Y", "Z"])
def test_rotation_2pi_periodic_up_to_phase(axis):
    rng = np.random.default_rng(13)
    state = random_state(2, rng)
    phi = float(rng.uniform(-np.pi, np.pi))
    a = apply_rotation(state, axis, phi, 0)
    b = apply_rotation(state, axis, phi + 2 * np.pi, 0)
    fidelity = abs(inner_product(a, b)) ** 2
    assert abs(fidelity - 1.0) < 1e-10


# --- cnot ---

def test_cnot_truth_table():
    ten = apply_rotation(zero_state(2), "X", np.pi, 0)  # |10> up to phase
    flipped = apply_cnot(ten, 0, 1)
    assert abs(abs(flipped.amplitudes[3]) - 1.0) < 1e-12  # |11>
    zero = apply_cnot(zero_state(2), 0, 1)
    assert np.array_equal(zero.amplitudes, [1, 0, 0, 0])


def test_cnot_is_involution():
    rng = np.random.default_rng(17)
    state = random_state(3, rng)
    twice = apply_cnot(apply_cnot(state, 2, 0), 2, 0)
    assert np.allclose(twice.amplitudes, state.amplitudes, atol=1e-12)


def test_cnot_rejects_bad_args():
    with pytest.raises(ValueError):
        apply_cnot(zero_state(2), 0, 0)
    with pytest.raises(ValueError):
        apply_cnot(zero_state(2), 0, 2)


# --- inner products ---

def test_self_inner_product_is_one():
    state = random_gate_sequence(zero_state(3), np.random.default_rng(19))
    value = inner_product(state, state)
    assert abs(value - 1.0) < 1e-10


def test_orthogonal_basis_states():
    one = apply_rotation(zero_state(1), "X", np.pi, 0)
    assert abs(inner_product(zero_state(1), one)) < 1e-12


def test_conjugate_symmetry():
    rng = np.random.default_rng(23)
    a, b = random_state(2, rng), random_state(2, rng)
    assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)))


def test_inner_product_rejects_size_mismatch():
    with pytest.raises(ValueError):
        inner_product(zero_state(1), zero_state(2))


# --- global invariants ---

def test_norm_preserved_by_gate_sequences():
    for seed in range(5):
        state = random_gate_sequence(zero_state(4), np.random.default_rng(seed), length=30)
        assert abs(state.norm_squared() - 1.0) < 1e-10


def test_unitarity_preserves_overlap():
    rng = np.random.default_rng(29)
    a, b = random_state(3, rng), random_state(3, rng)
    before = abs(inner_product(a, b))
    for gate in (
        lambda s: apply_rotation(s, "X", 0.7, 1),
        lambda s: apply_rotation(s, "Y", -1.3, 0),
        lambda s: apply_rotation(s, "Z", 2.2, 2),
        lambda s: apply_cnot(s, 0, 2),
    ):
        assert abs(abs(inner_product(gate(a), gate(b))) - before) < 1e-10


# --- z expectation ---

def test_z_expectation_basis_states():
    assert z_expectation(zero_state(2), 0) == pytest.approx(1.0)
    one = apply_rotation(zero_state(2), "X", np.pi, 1)
    assert z_expectation(one, 1) == pytest.approx(-1.0)
    assert z_expectation(one, 0) == pytest.approx(1.0)


def test_z_expectation_after_rx():
    # RX(phi)|0> has <Z> = cos(phi)
    phi = 0.9
    state = apply_rotation(zero_state(1), "X", phi, 0)
    assert z_expectation(state, 0) == pytest.approx(np.cos(phi), abs=1e-12)
