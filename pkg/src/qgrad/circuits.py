"""Parametrized circuits, exact derivatives, and VQE objectives via the Hadamard test.

A circuit is U(x) = U_0 prod_j (P_j e^(i x_j H_j) + (I - P_j)) U_j with the
product taken left to right; P_j must commute with H_j (the tensor form
P (x) e^(i x H) + (I - P) (x) I is the special case P (x) I, I (x) H).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, QGradError, ValidationError
from .gradient import GradientJob, GradientReport, PreparedJob, prepare
from .grid import GridSpec, label_array
from .oracles import (PhaseOracle, ProbabilityOracle, QueryLedger, choose_M, conversion_queries,
                      probability_to_phase)
from .statevec import is_unitary


class BoundViolation(QGradError):
    """A smoothness bound failed (indicates an implementation bug)."""


PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
_PROJ = {"I": np.eye(2), "0": np.diag([1.0, 0.0]), "1": np.diag([0.0, 1.0])}


def pauli_matrix(text: str) -> np.ndarray:
    """'XZ', '-Y', '+ZI' -> dense matrix (first letter = most significant qubit)."""
    s = text.strip()
    sign = 1.0
    if s[:1] in "+-":
        sign = -1.0 if s[0] == "-" else 1.0
        s = s[1:]
    if not s or any(ch not in PAULI for ch in s.upper()):
        raise ValidationError(f"bad Pauli string {text!r}")
    out = np.array([[1.0 + 0j]])
    for ch in s.upper():
        out = np.kron(out, PAULI[ch])
    return sign * out


def projector_matrix(text: str) -> np.ndarray:
    if any(ch not in _PROJ for ch in text):
        raise ValidationError(f"bad projector string {text!r}")
    out = np.array([[1.0]])
    for ch in text:
        out = np.kron(out, _PROJ[ch])
    return out.astype(np.complex128)


def _is_projector(P: np.ndarray, tol: float = 1e-10) -> bool:
    return np.abs(P @ P - P).max() <= tol and np.abs(P - P.conj().T).max() <= tol


def opnorm(A: np.ndarray) -> float:
    return float(np.linalg.norm(A, 2))


@dataclass
class CircuitFactor:
    H: np.ndarray
    U: np.ndarray
    P: np.ndarray | None = None
    _eig: tuple = field(default=None, repr=False)

    def __post_init__(self) -> None:
        D = self.H.shape[0]
        self.H = np.asarray(self.H, dtype=np.complex128)
        self.U = np.asarray(self.U, dtype=np.complex128)
        self.P = np.eye(D, dtype=np.complex128) if self.P is None else np.asarray(self.P, dtype=np.complex128)
        if np.abs(self.H - self.H.conj().T).max() > 1e-10:
            raise ValidationError("generator is not Hermitian")
        if not _is_projector(self.P):
            raise ValidationError("P is not an orthogonal projector")
        if np.abs(self.P @ self.H - self.H @ self.P).max() > 1e-10:
            raise ValidationError("projector must commute with its generator")
        if opnorm(self.U) > 1 + 1e-10:
            raise ValidationError("fixed factor has operator norm above 1")
        w, v = np.linalg.eigh(self.H)
        self._eig = (w, v)

    def matrix(self, x: float, order: int = 0) -> np.ndarray:
        """d^order/dx^order of P e^(i x H) + (I - P)."""
        w, v = self._eig
        diag = (1j * w) ** order * np.exp(1j * x * w)
        out = self.P @ ((v * diag) @ v.conj().T)
        if order == 0:
            out = out + (np.eye(self.P.shape[0]) - self.P)
        return out

    def apply_batch(self, xs: np.ndarray, psi: np.ndarray) -> np.ndarray:
        """Apply the factor at parameters xs (B,) to states psi (B, D)."""
        w, v = self._eig
        coeff = psi @ v.conj()  # rows: V^dagger psi
        rotated = (coeff * np.exp(1j * np.outer(xs, w))) @ v.T
        return rotated @ self.P.T + psi @ (np.eye(self.P.shape[0]) - self.P).T


@dataclass
class ParametrizedCircuit:
    U0: np.ndarray
    factors: list[CircuitFactor]

    def __post_init__(self) -> None:
        self.U0 = np.asarray(self.U0, dtype=np.complex128)
        if opnorm(self.U0) > 1 + 1e-10:
            raise ValidationError("U0 has operator norm above 1")
        for f in self.factors:
            if f.H.shape != self.U0.shape:
                raise ValidationError("factor dimensions do not match U0")

    @property
    def d(self) -> int:
        return len(self.factors)

    @property
    def dim(self) -> int:
        return self.U0.shape[0]

    @property
    def gamma(self) -> float:
        return max((opnorm(f.H) for f in self.factors), default=0.0)

    def unitary(self, x: Sequence[float]) -> np.ndarray:
        return self.derivative(x, ())

    def derivative(self, x: Sequence[float], alpha: Sequence[int]) -> np.ndarray:
        """d_alpha U(x) by inserting (iH_j)^mult; alpha holds 0-based parameter indices."""
        x = np.asarray(x, dtype=float)
        if x.size != self.d:
            raise ConfigurationError(f"expected {self.d} parameters, got {x.size}")
        mult = np.bincount(np.asarray(alpha, dtype=int), minlength=self.d) if len(alpha) else np.zeros(self.d, int)
        out = self.U0.copy()
        for j, f in enumerate(self.factors):
            out = out @ f.matrix(x[j], int(mult[j])) @ f.U
        return out

    def states(self, points: np.ndarray) -> np.ndarray:
        """U(x)|0> for every row of points, shape (B, D)."""
        pts = np.atleast_2d(points)
        psi = np.zeros((pts.shape[0], self.dim), dtype=np.complex128)
        psi[:, 0] = 1.0
        for j in range(self.d - 1, -1, -1):
            f = self.factors[j]
            psi = psi @ f.U.T
            psi = f.apply_batch(pts[:, j], psi)
        return psi @ self.U0.T


def _check_projector(Pi: np.ndarray, dim: int) -> np.ndarray:
    Pi = np.asarray(Pi, dtype=np.complex128)
    if Pi.shape != (dim, dim) or not _is_projector(Pi):
        raise ValidationError("measurement operator is not an orthogonal projector")
    return Pi


def circuit_probability(circuit: ParametrizedCircuit, x, Pi: np.ndarray) -> float:
    Pi = _check_projector(Pi, circuit.dim)
    psi = circuit.unitary(x)[:, 0]
    return float(np.real(np.vdot(psi, Pi @ psi)))


def circuit_partial_derivative(circuit: ParametrizedCircuit, x, alpha: Sequence[int],
                               check: bool = True) -> np.ndarray:
    if len(alpha) > 6 or circuit.dim > 64:
        raise ConfigurationError("derivative limited to |alpha| <= 6 and dimension <= 64")
    D = circuit.derivative(x, alpha)
    if check and circuit.factors:
        bound = circuit.gamma ** len(alpha)
        norm = opnorm(D)
        if norm > bound * (1 + 1e-9) + 1e-12:
            raise BoundViolation(f"||d_alpha U|| = {norm:.6g} exceeds gamma^k = {bound:.6g}")
    return D


def objective_derivative(circuit: ParametrizedCircuit, x, alpha: Sequence[int], Pi: np.ndarray) -> float:
    """d_alpha <0|U^dagger Pi U|0> by the product rule over subsets of positions."""
    Pi = _check_projector(Pi, circuit.dim)
    alpha = list(alpha)
    k = len(alpha)
    cache: dict[tuple, np.ndarray] = {}

    def col(sub: tuple) -> np.ndarray:
        key = tuple(sorted(sub))
        if key not in cache:
            cache[key] = circuit.derivative(x, key)[:, 0]
        return cache[key]

    total = 0j
    for mask in itertools.product((0, 1), repeat=k):
        left = tuple(a for a, b in zip(alpha, mask) if b)
        right = tuple(a for a, b in zip(alpha, mask) if not b)
        total += np.vdot(col(left), Pi @ col(right))
    return float(np.real(total))


def objective_derivative_bound_check(circuit: ParametrizedCircuit, x, alpha: Sequence[int],
                                     Pi: np.ndarray, gamma: float | None = None) -> float:
    """Assert |d_alpha p(x)| <= (2 gamma)^|alpha|; returns the derivative."""
    val = objective_derivative(circuit, x, alpha, Pi)
    g = circuit.gamma if gamma is None else gamma
    bound = (2 * g) ** len(alpha)
    if abs(val) > bound * (1 + 1e-9) + 1e-12:
        raise BoundViolation(f"|d_alpha p| = {abs(val):.6g} exceeds (2 gamma)^k = {bound:.6g}")
    return val


# --- random instances ---

def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(dim: int, norm: float, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (a + a.conj().T) / 2
    return h * (norm / opnorm(h))


def random_circuit(num_qubits: int, d: int, gamma: float, rng: np.random.Generator,
                   controlled_prob: float = 0.5) -> ParametrizedCircuit:
    """Random instance with ||H_j|| = gamma; some factors controlled on qubit 0."""
    dim = 1 << num_qubits
    factors = []
    for _ in range(d):
        if num_qubits > 1 and rng.random() < controlled_prob:
            h = random_hermitian(dim // 2, gamma, rng)
            H = np.kron(np.eye(2), h)
            P = np.kron(np.diag([0.0, 1.0]), np.eye(dim // 2))
        else:
            H = random_hermitian(dim, gamma, rng)
            P = None
        factors.append(CircuitFactor(H=H, U=haar_unitary(dim, rng), P=P))
    return ParametrizedCircuit(haar_unitary(dim, rng), factors)


# --- VQE ---

@dataclass
class VqeInstance:
    """H = sum_j a_j U_j with unitary Hermitian terms and a tuned ansatz |psi(x)> = U(x)|0>."""

    weights: np.ndarray
    terms: list[np.ndarray]
    ansatz: ParametrizedCircuit

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        if (self.weights < 0).any() or abs(self.weights.sum() - 1) > 1e-12:
            raise ValidationError("weights must be nonnegative and sum to 1")
        if len(self.terms) != self.weights.size or not self.terms:
            raise ValidationError("need one term per weight")
        for T in self.terms:
            T = np.asarray(T)
            if T.shape != self.ansatz.U0.shape:
                raise ValidationError("term dimension does not match the ansatz")
            if not is_unitary(T) or np.abs(T - T.conj().T).max() > 1e-10:
                raise ValidationError("terms must be unitary and Hermitian")

    @property
    def d(self) -> int:
        return self.ansatz.d

    @property
    def system_qubits(self) -> int:
        return int(round(math.log2(self.ansatz.dim)))

    @property
    def weight_qubits(self) -> int:
        return math.ceil(math.log2(self.weights.size)) if self.weights.size > 1 else 0

    @property
    def hamiltonian(self) -> np.ndarray:
        return sum(a * np.asarray(T) for a, T in zip(self.weights, self.terms))

    def prepare_w(self) -> np.ndarray:
        L = 1 << self.weight_qubits
        v = np.zeros(L)
        v[:self.weights.size] = np.sqrt(self.weights)
        e = np.zeros(L)
        e[0] = 1.0
        w = v - e
        if np.linalg.norm(w) < 1e-15:
            return np.eye(L, dtype=np.complex128)
        w /= np.linalg.norm(w)
        return (np.eye(L) - 2 * np.outer(w, w)).astype(np.complex128)

    def select_h(self) -> np.ndarray:
        L = 1 << self.weight_qubits
        D = self.ansatz.dim
        out = np.zeros((L * D, L * D), dtype=np.complex128)
        for j in range(L):
            T = np.asarray(self.terms[j]) if j < len(self.terms) else np.eye(D)
            out[j * D:(j + 1) * D, j * D:(j + 1) * D] = T
        return out

    def energy(self, points: np.ndarray) -> np.ndarray:
        psi = self.ansatz.states(points)
        return np.real(np.einsum("bi,ij,bj->b", psi.conj(), self.hamiltonian, psi))

    def probability(self, points: np.ndarray) -> np.ndarray:
        """Indicator probability 1/2 - <psi|H|psi>/2 (vectorized)."""
        return 0.5 - self.energy(points) / 2

    def energy_gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        psi = self.ansatz.unitary(x)[:, 0]
        Hm = self.hamiltonian
        return np.array([2 * np.real(np.vdot(self.ansatz.derivative(x, (j,))[:, 0], Hm @ psi))
                         for j in range(self.d)])

    def probability_gradient(self, x) -> np.ndarray:
        return -self.energy_gradient(x) / 2

    def hadamard_test_unitary(self, x) -> np.ndarray:
        """Unitary on (w, system, indicator); P(indicator = 1) = 1/2 - Re<psi|H|psi>/2."""
        L = 1 << self.weight_qubits
        D = self.ansatz.dim
        Hd = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
        I_ws = np.eye(L * D)
        tuned = np.kron(np.kron(np.eye(L), self.ansatz.unitary(x)), np.eye(2))
        had = np.kron(I_ws, Hd)
        W = np.kron(np.kron(self.prepare_w(), np.eye(D)), np.eye(2))
        ctrl = np.kron(self.select_h(), np.diag([0.0, 1.0])) + np.kron(I_ws, np.diag([1.0, 0.0]))
        return had @ W.conj().T @ ctrl @ W @ had @ tuned

    @property
    def aux_qubits(self) -> int:
        return self.weight_qubits + self.system_qubits + 1

    # serialization

    @classmethod
    def from_dict(cls, data: dict) -> "VqeInstance":
        try:
            weights = np.asarray(data["weights"], dtype=float)
            terms = [pauli_matrix(s) for s in data["terms"]]
            ans = data["ansatz"]
            gens = ans["generators"]
        except KeyError as exc:
            raise ValidationError(f"instance missing field {exc}") from None
        gamma = float(data.get("gamma", 1.0))
        projs = ans.get("projectors") or [None] * len(gens)
        if len(projs) != len(gens):
            raise ValidationError("need one projector per generator")
        factors = []
        for g, p in zip(gens, projs):
            G = pauli_matrix(g)
            P = projector_matrix(p) if p else None
            factors.append(CircuitFactor(H=-gamma * G, U=np.eye(G.shape[0]), P=P))
        if not factors:
            raise ValidationError("ansatz needs at least one generator")
        dim = factors[0].H.shape[0]
        return cls(weights, terms, ParametrizedCircuit(np.eye(dim), factors))

    @classmethod
    def load(cls, path: str | Path) -> "VqeInstance":
        return cls.from_dict(json.loads(Path(path).read_text()))


def vqe_objective_oracle(instance: VqeInstance, grid: GridSpec,
                         ledger: QueryLedger | None = None) -> ProbabilityOracle:
    """Probability oracle whose block at grid point x is the Hadamard-test circuit at y + r x."""
    pts = np.asarray(grid.y) + grid.r * label_array(grid.n, grid.d, limit=12)
    blocks = np.stack([instance.hadamard_test_unitary(p) for p in pts])
    return ProbabilityOracle(blocks, instance.aux_qubits, ledger or QueryLedger())


class ConvertedPhaseOracle(PhaseOracle):
    """Phase oracle realized from a probability oracle; each unit costs a fixed number of queries."""

    def __init__(self, f, queries_per_unit: int, ledger: QueryLedger | None = None):
        super().__init__(f, ledger or QueryLedger(keep_notes=False))
        self.queries_per_unit = queries_per_unit

    def charge(self, power: float, controlled: bool = False, inverse: bool = False) -> int:
        units = super().charge(power, controlled, inverse)
        self.ledger.charge_probability(units * self.queries_per_unit)
        return units


@dataclass
class VqeGradientPlan:
    instance: VqeInstance
    prepared: PreparedJob
    conversion_eps: float
    conversion_M: int
    certified_deviation: float

    @property
    def job(self) -> GradientJob:
        return self.prepared.job

    def run(self, seed) -> GradientReport:
        oracle = ConvertedPhaseOracle(self.instance.probability, conversion_queries(self.conversion_M))
        truth = self.instance.probability_gradient(self.job.y)
        return self.prepared.run(seed, oracle, truth)


def plan_vqe_gradient(instance: VqeInstance, x, eps: float, rho: float, c: float = 2.0,
                      budget: float = 1e-2, certify_points: int = 8,
                      scaling: str = "tight") -> VqeGradientPlan:
    """Parameters, conversion accuracy and exact outcome distribution for the VQE gradient.

    Each phase unit is one converted query of accuracy ``budget / units``; the
    conversion is certified on a sample of evaluation points.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != instance.d:
        raise ConfigurationError(f"expected {instance.d} parameters")
    job = GradientJob.smooth(x.size, eps, rho, c, x, scaling=scaling)
    per_unit = budget / job.units_per_invocation
    M = choose_M(per_unit)
    rng = np.random.default_rng(0)
    labels = rng.uniform(-0.5, 0.5, size=(certify_points, x.size))
    ells = rng.integers(-job.m, job.m + 1, size=certify_points)
    pts = x + (ells * job.r)[:, None] * labels
    blocks = np.stack([instance.hadamard_test_unitary(p) for p in pts])
    sample = ProbabilityOracle(blocks, instance.aux_qubits)
    worst = 0.0
    for t in (1.0, -1.0, float(rng.uniform(-1, 1))):
        worst = max(worst, probability_to_phase(sample, per_unit, t=t, M=M, charge=False).max_deviation)
    prepared = prepare(instance.probability, job)
    return VqeGradientPlan(instance, prepared, per_unit, M, worst)


def vqe_gradient(instance: VqeInstance, x, eps: float, rho: float, seed=0, c: float = 2.0) -> GradientReport:
    return plan_vqe_gradient(instance, x, eps, rho, c).run(seed)


def sigma_y_instance() -> VqeInstance:
    """H = Z with ansatz e^(-i x Y)|0>: p(x) = 1/2 - cos(2x)/2."""
    return VqeInstance.from_dict({"weights": [1.0], "terms": ["Z"],
                                  "ansatz": {"generators": ["Y"]}, "gamma": 1.0})
