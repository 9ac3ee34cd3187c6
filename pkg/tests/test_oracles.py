import json
import math
import threading

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qgrad.errors import CertificationError, DomainError, PremiseError, RangeError, ValidationError
from qgrad.grid import GridSpec
from qgrad.oracles import (BinaryOracleCostModel, PhaseOracle, QueryLedger, asymptotic_M,
                           build_probability_oracle, choose_M, conversion_queries,
                           distribution_hamiltonian_simulation, distribution_probability_oracle,
                           grover_blocks, grover_operator, invariant_eigenphases, lcu_beta,
                           oblivious_amplitude_amplify, probability_to_phase)
from qgrad.statevec import is_unitary, uniform_superposition


def haar(dim, rng):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / abs(np.diag(r)))


# --- ledger ---

@given(st.floats(-50, 50, allow_nan=False))
def test_ledger_units(t):
    led = QueryLedger()
    assert led.charge_phase(t) == math.ceil(abs(t))
    assert led.charge_phase(t, controlled=True) == led.charge_phase(t, inverse=True) == math.ceil(abs(t))


def test_ledger_examples_and_json():
    led = QueryLedger()
    for t in (0, 0.3, -1, 2.5):
        led.charge_phase(t, controlled=t < 0)
    led.charge_probability(7)
    data = json.loads(led.to_json())
    assert data["phase_query_units"] == 0 + 1 + 1 + 3
    assert data["probability_queries"] == 7
    assert data["calls"][2] == {"power": -1.0, "controlled": True, "inverse": False}
    with pytest.raises(DomainError):
        led.charge_phase(math.inf)


def test_ledger_threads():
    led = QueryLedger(keep_notes=False)
    threads = [threading.Thread(target=lambda: [led.charge_phase(1.5) for _ in range(1000)]) for _ in range(4)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert led.phase_query_units == 8000


def test_phase_oracle_apply():
    orc = PhaseOracle(lambda x: x[:, 0] * 3.0)
    grid = GridSpec(2, 1, r=2.0, y=(1.0,))
    s = uniform_superposition(1, 2)
    orc.apply(s, 0.5, grid)
    pts = 1.0 + 2.0 * np.array([-3, -1, 1, 3]) / 8
    assert np.allclose(s.amplitudes, 0.5 * np.exp(1j * 0.5 * 3 * pts))
    assert orc.ledger.phase_query_units == 1


def test_binary_cost_model():
    m = BinaryOracleCostModel()
    assert m.phase_query_cost(0) == 0
    assert m.phase_query_cost(8, 0.125) == pytest.approx(6.0)


# --- probability oracles and Grover ---

def test_probability_oracle_examples():
    orc = build_probability_oracle(np.zeros(2), n_aux=2)
    assert np.allclose(orc.blocks[:, :, 0], [[1, 0, 0, 0]] * 2)
    orc = build_probability_oracle(np.ones(2))
    assert np.allclose(np.abs(orc.blocks[:, 1, 0]), 1)
    orc = build_probability_oracle([0.5, 0.5])
    assert is_unitary(orc.dense())
    rng = np.random.default_rng(0)
    hits = rng.random(10_000) < abs(orc.blocks[0, 1, 0]) ** 2
    assert abs(hits.mean() - 0.5) < 0.02
    with pytest.raises(DomainError):
        build_probability_oracle([0.5, 1.1])


def test_probability_oracle_from_grid_function():
    grid = GridSpec(2, 1, r=1.0, y=(0.5,))
    orc = build_probability_oracle(lambda x: x[:, 0], grid=grid)
    assert np.allclose(orc.p, 0.5 + np.array([-3, -1, 1, 3]) / 8)


@pytest.mark.parametrize("p,phase", [(0.5, math.pi / 2), (0.25, math.pi / 3)])
def test_grover_eigenphases(p, phase):
    G = grover_blocks(build_probability_oracle([p]).blocks)[0]
    assert np.allclose(invariant_eigenphases(G), [-phase, phase], atol=1e-10)


def test_grover_p_zero_fixes_start():
    G = grover_operator(build_probability_oracle([0.0, 0.0]))
    v = np.zeros(4)
    v[0] = 1
    assert np.allclose(G @ v, v)


@given(st.lists(st.floats(0, 1), min_size=4, max_size=4), st.integers(1, 3))
def test_grover_eigenphases_property(ps, n_aux):
    orc = build_probability_oracle(ps, n_aux=n_aux)
    for block, p in zip(grover_blocks(orc.blocks), orc.p):
        ph = invariant_eigenphases(block)
        expect = 2 * math.asin(math.sqrt(min(max(p, 0), 1)))
        assert np.allclose(np.abs(ph), expect, atol=1e-8) or (expect < 1e-7 and np.allclose(ph, 0, atol=1e-7))


def test_grover_dense_layout_matches_blocks():
    orc = build_probability_oracle([0.1, 0.7], n_aux=2)
    assert np.allclose(grover_operator(orc.dense(), 1, 2), grover_operator(orc))
    with pytest.raises(ValidationError):
        grover_operator(haar(8, np.random.default_rng(1)), 1, 2)


# --- LCU ---

def test_beta_m1():
    c = lcu_beta(1)
    assert np.allclose(c.beta, [-0.25j, 1 + 0.5j, -0.25j])
    assert c.l1 == pytest.approx(math.sqrt(1.25) + 0.5)
    theta = np.linspace(0, math.pi, 9)
    assert np.allclose(c.series(theta), 1 + 1j * np.sin(theta) ** 2)


def test_beta_m0_and_range():
    c = lcu_beta(0)
    assert np.allclose(c.beta, [1.0]) and c.truncation_error() <= 1
    with pytest.raises(RangeError):
        lcu_beta(61)


@pytest.mark.parametrize("M", range(0, 21))
def test_beta_l1_and_truncation(M):
    c = lcu_beta(M)
    assert c.l1 <= math.e
    assert c.truncation_error() <= 1 / math.factorial(M) + 1e-12


@given(st.floats(-1, 1))
def test_beta_fractional(t):
    c = lcu_beta(6, t)
    assert c.truncation_error() <= 1 / math.factorial(6)


def test_choose_M():
    for eps in (0.1, 0.01, 1e-3, 1e-6):
        M = choose_M(eps)
        assert (math.e / M) ** M <= eps / 10
        assert M == 1 or (math.e / (M - 1)) ** (M - 1) > eps / 10
        assert M <= max(asymptotic_M(eps), 2) + 1
    assert conversion_queries(8) == 160


# --- conversion ---

def test_conversion_zero_p_is_identity():
    conv = probability_to_phase(build_probability_oracle(np.zeros(2)), 1e-2)
    assert conv.max_deviation <= 1e-2
    assert np.allclose(conv.columns()[:, 0], 1, atol=1e-2)


def test_conversion_against_exact_diagonal(rng):
    p = rng.uniform(0.1, 0.9, 4)
    orc = build_probability_oracle(p)
    conv = probability_to_phase(orc, 1e-3)
    cols = conv.columns()
    assert np.abs(cols[:, 0] - np.exp(1j * p)).max() <= 1e-3
    assert np.linalg.norm(cols[:, 1:], axis=1).max() <= 1e-3
    assert orc.ledger.probability_queries == 2 * (2 * 2 + 1) * conv.M * 2
    assert is_unitary(conv.blocks[0])


def test_conversion_query_growth():
    orc = build_probability_oracle([0.3, 0.6])
    small = probability_to_phase(orc, 1e-1, charge=False)
    large = probability_to_phase(orc, 1e-4, charge=False)
    assert large.queries_per_call / small.queries_per_call == pytest.approx(large.M / small.M)
    assert orc.ledger.probability_queries == 0


def test_conversion_fractional_power(rng):
    p = rng.uniform(0, 1, 2)
    conv = probability_to_phase(build_probability_oracle(p), 1e-2, t=-0.4)
    assert np.abs(conv.columns()[:, 0] - np.exp(-0.4j * p)).max() <= 1e-2


def test_conversion_errors():
    orc = build_probability_oracle([0.2, 0.4])
    with pytest.raises(DomainError):
        probability_to_phase(orc, 0.5)
    with pytest.raises(DomainError):
        probability_to_phase(orc, 0.1, t=1.5)
    with pytest.raises(CertificationError) as info:
        probability_to_phase(orc, 1e-3, M=1)
    assert info.value.deviation > 1e-3


def test_series_on_grover_blocks(rng):
    orc = build_probability_oracle(rng.uniform(0, 1, 4))
    for M in (2, 6, 12):
        c = lcu_beta(M)
        for G, p in zip(grover_blocks(orc.blocks), orc.p):
            v = np.zeros(G.shape[0])
            v[0] = 1
            q, _ = np.linalg.qr(np.column_stack([v, G @ v]))
            g2 = q.conj().T @ G @ q
            total = sum(b * np.linalg.matrix_power(g2 if m >= 0 else g2.conj().T, abs(m))
                        for m, b in zip(range(-M, M + 1), c.beta))
            assert np.linalg.norm(total - np.exp(1j * p) * np.eye(2), 2) <= 1 / math.factorial(M) + 1e-12


# --- oblivious amplification ---

def amplification_instance(k, eps, rng, sys_qubits=1):
    D = 1 << sys_qubits
    s = math.sin(math.pi / (2 * (2 * k + 1)))
    U = haar(D, rng)
    R = np.array([[s, -math.sqrt(1 - s * s)], [math.sqrt(1 - s * s), s]])
    W = np.kron(U, np.eye(2)) @ np.kron(np.eye(D), R)
    if eps:
        K = rng.normal(size=(2 * D, 2 * D)) + 1j * rng.normal(size=(2 * D, 2 * D))
        K = (K + K.conj().T) / 2
        w, v = np.linalg.eigh(K / np.linalg.norm(K, 2))
        W = W @ (v * np.exp(1j * 0.9 * s * eps * w)) @ v.conj().T
    Pi = np.kron(np.eye(D), np.diag([1.0, 0.0]))
    return W, Pi, np.kron(U, np.eye(2))


def test_oaa_exact_k1(rng):
    W, Pi, target = amplification_instance(1, 0.0, rng)
    res = oblivious_amplitude_amplify(W, Pi, Pi, 1, target, eps=0.0)
    assert res.deviation < 1e-12
    out = res.unitary @ np.array([1, 0, 0, 0])
    assert abs(np.linalg.norm(Pi @ out) - 1) < 1e-12


def test_oaa_k0_returns_input(rng):
    W, Pi, _ = amplification_instance(1, 0.0, rng)
    assert np.array_equal(oblivious_amplitude_amplify(W, Pi, Pi, 0).unitary, W)


def test_oaa_perturbed(rng):
    W, Pi, target = amplification_instance(2, 1e-2, rng, sys_qubits=2)
    res = oblivious_amplitude_amplify(W, Pi, Pi, 2, target, eps=1e-2)
    assert res.precondition_deviation <= 1e-2
    assert res.deviation <= 0.1


def test_oaa_precondition_violation(rng):
    W, Pi, target = amplification_instance(1, 0.0, rng)
    with pytest.raises(PremiseError) as info:
        oblivious_amplitude_amplify(W, Pi, Pi, 2, target, eps=1e-3)
    psi = info.value.worst_state
    assert abs(np.linalg.norm(psi) - 1) < 1e-12 and np.allclose(Pi @ psi, psi)


# --- distribution oracle and Hamiltonian simulation ---

def state_prep(amps):
    v = np.asarray(amps, dtype=complex)
    Q, _ = np.linalg.qr(np.column_stack([v, np.eye(v.size)[:, 1:]]))
    return Q * (v[0] / Q[0, 0]) if abs(Q[0, 0]) > 0 else Q


def test_distribution_oracle_probabilities(rng):
    p = rng.dirichlet(np.ones(4))
    psi = np.sqrt(p).reshape(4, 1) * (haar(2, rng)[:, 0])[None, :]
    U = state_prep(psi.reshape(-1))
    assert np.allclose(U[:, 0], psi.reshape(-1))
    orc = distribution_probability_oracle(U, 2, 1)
    assert np.allclose(orc.p, p, atol=1e-12)


def test_hamiltonian_simulation_examples():
    U = state_prep(np.sqrt([0.3, 0.7]))
    sim = distribution_hamiltonian_simulation(U, 1.0, 1e-2, 1)
    assert np.abs(sim.blocks[:, 0, 0] - np.exp(1j * np.array([0.3, 0.7]))).max() <= 1e-2
    sim = distribution_hamiltonian_simulation(U, 3.7, 1e-2, 1)
    assert sim.rounds == 4 and sim.fraction == pytest.approx(0.925) and sim.deviation <= 1e-2
    zero = distribution_hamiltonian_simulation(U, 0.0, 1e-2, 1)
    assert zero.queries == 0 and np.allclose(zero.blocks[:, 0, 0], 1)
