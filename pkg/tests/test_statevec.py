import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qgrad.errors import NumericError, ResourceError, StateCorruptionError, ValidationError
from qgrad.grid import grid_labels, label_index
from qgrad.statevec import (StateVector, apply_diagonal_phase, apply_unitary, basis_state, dump_state,
                            inverse_qft_grid, is_unitary, load_state, marginal, measure_registers,
                            output_distribution, qft_grid, qft_grid_matrix, uniform_superposition)


def reference_inverse_qft(n):
    x = grid_labels(n)
    return np.exp(-2j * math.pi * (1 << n) * np.outer(x, x)) / math.sqrt(1 << n)


def test_uniform():
    assert np.allclose(uniform_superposition(1, 1).amplitudes, [2 ** -0.5] * 2)
    s = uniform_superposition(2, 1)
    assert np.allclose(s.amplitudes, 0.5) and abs(s.norm() - 1) < 1e-12
    with pytest.raises(ResourceError):
        uniform_superposition(3, 9)


def test_phase_examples():
    s = uniform_superposition(1, 2)
    before = s.amplitudes.copy()
    apply_diagonal_phase(s, lambda x: np.zeros(x.shape[0]))
    assert np.allclose(s.amplitudes, before)
    apply_diagonal_phase(s, lambda x: np.full(x.shape[0], math.pi))
    assert np.allclose(s.amplitudes, -before)
    s = uniform_superposition(1, 1)
    g = 0.25
    apply_diagonal_phase(s, lambda x: 2 * math.pi * 2 * g * x[:, 0])
    direct = np.diag(np.exp(2j * math.pi * 2 * g * grid_labels(1))) @ np.full(2, 2 ** -0.5)
    assert np.allclose(s.amplitudes, direct)


def test_phase_nonfinite_names_label():
    s = uniform_superposition(1, 2)
    with pytest.raises(NumericError, match="0.125"):
        apply_diagonal_phase(s, lambda x: np.where(x[:, 0] == 0.125, np.inf, 0.0))


def test_phases_commute(rng):
    a = rng.normal(size=16) * 1e4
    b = rng.normal(size=16)
    s1, s2 = uniform_superposition(2, 2), uniform_superposition(2, 2)
    apply_diagonal_phase(s1, a); apply_diagonal_phase(s1, b)
    apply_diagonal_phase(s2, b); apply_diagonal_phase(s2, a)
    assert np.allclose(s1.amplitudes, s2.amplitudes, atol=1e-12)


def test_qft_n1_matrix():
    expected = np.array([[np.exp(-1j * math.pi / 4), np.exp(1j * math.pi / 4)],
                         [np.exp(1j * math.pi / 4), np.exp(-1j * math.pi / 4)]]) / math.sqrt(2)
    assert np.allclose(qft_grid_matrix(1, inverse=True), expected)
    assert is_unitary(expected)


@pytest.mark.parametrize("n", range(1, 9))
def test_qft_paths_agree(n):
    ref = reference_inverse_qft(n)
    assert np.abs(qft_grid_matrix(n, inverse=True) - ref).max() < 1e-10
    cols = []
    for j in range(1 << n):
        s = basis_state([n], [j])
        cols.append(inverse_qft_grid(s, 0, method="conjugated").amplitudes)
    assert np.abs(np.array(cols).T - ref).max() < 1e-10


def test_qft_roundtrip_multi_register(rng):
    amps = rng.normal(size=64) + 1j * rng.normal(size=64)
    s = StateVector(amps / np.linalg.norm(amps), (3, 3))
    orig = s.amplitudes.copy()
    qft_grid(inverse_qft_grid(s, 1), 1)
    assert np.abs(s.amplitudes - orig).max() < 1e-10
    inverse_qft_grid(s, 0, method="dense")
    t = StateVector(orig.copy(), (3, 3))
    inverse_qft_grid(t, 0, method="conjugated")
    assert np.abs(s.amplitudes - t.amplitudes).max() < 1e-10
    with pytest.raises(Exception):
        inverse_qft_grid(s, 2)


@given(st.integers(1, 8), st.data())
def test_phase_gradient_decodes(n, data):
    j = data.draw(st.integers(0, (1 << n) - 1))
    g = grid_labels(n)[j]
    s = uniform_superposition(1, n)
    apply_diagonal_phase(s, lambda x: 2 * math.pi * (1 << n) * g * x[:, 0])
    inverse_qft_grid(s, 0)
    assert abs(abs(s.amplitudes[j]) ** 2 - 1) < 1e-10


def test_apply_unitary(rng):
    s = basis_state([2], [0])
    apply_unitary(s, np.eye(2), [0])
    assert s.amplitudes[0] == 1
    apply_unitary(s, np.array([[0, 1], [1, 0]]), [1])
    assert np.allclose(s.amplitudes, [0, 1, 0, 0])
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    amps = rng.normal(size=8) + 0j
    s = StateVector(amps / np.linalg.norm(amps), (3,))
    orig = s.amplitudes.copy()
    apply_unitary(s, q, [2, 0])
    apply_unitary(s, q.conj().T, [2, 0])
    assert np.abs(s.amplitudes - orig).max() < 1e-10
    with pytest.raises(ValidationError):
        apply_unitary(s, np.array([[1, 1], [0, 1]]), [0])


def test_apply_unitary_embedding_matches_kron(rng):
    q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 0j)
    amps = rng.normal(size=8) + 0j
    amps /= np.linalg.norm(amps)
    s = StateVector(amps.copy(), (3,))
    apply_unitary(s, q, [1])
    assert np.allclose(s.amplitudes, np.kron(np.kron(np.eye(2), q), np.eye(2)) @ amps)


def test_measure_basis_state():
    n = 3
    s = basis_state([n, n], [label_index(n, 3 / 16), label_index(n, -5 / 16)])
    out = measure_registers(s, 7)
    assert out.tolist() == [3 / 16, -5 / 16]


def test_measure_uniform_frequency():
    out = measure_registers(uniform_superposition(1, 1), 3, shots=10_000)
    assert abs(np.mean(out[:, 0] > 0) - 0.5) < 0.02


def test_measure_deterministic():
    s = uniform_superposition(2, 3)
    assert np.array_equal(measure_registers(s, 9, shots=50), measure_registers(s, 9, shots=50))


def test_distribution_matches_sampling(rng):
    amps = rng.normal(size=8) + 1j * rng.normal(size=8)
    s = StateVector(amps / np.linalg.norm(amps), (3,))
    dist = output_distribution(s)
    assert (dist >= 0).all() and abs(dist.sum() - 1) < 1e-9
    draws = measure_registers(s, 1, shots=10_000)[:, 0]
    idx = np.array([label_index(3, v) for v in draws])
    freq = np.bincount(idx, minlength=8) / 10_000
    sigma = np.sqrt(dist * (1 - dist) / 10_000)
    assert np.all(np.abs(freq - dist) <= 3 * sigma + 1e-3)
    assert np.allclose(marginal(output_distribution(uniform_superposition(2, 2)), 1), 0.25)


def test_corruption_detected():
    s = uniform_superposition(1, 2)
    s.amplitudes *= 1.01
    with pytest.raises(StateCorruptionError):
        measure_registers(s, 0)


def test_dump_roundtrip(tmp_path, rng):
    amps = rng.normal(size=16) + 1j * rng.normal(size=16)
    s = StateVector(amps / np.linalg.norm(amps), (2, 2))
    path = tmp_path / "s.qgsv"
    dump_state(s, path)
    raw = path.read_bytes()
    assert raw[:4] == b"QGSV" and len(raw) == 16 + 16 * 16
    back = load_state(path, (2, 2))
    assert np.array_equal(back.amplitudes, s.amplitudes)
