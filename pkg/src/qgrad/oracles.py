"""Query-metered oracles, probability-to-phase conversion and its building blocks.

Operators that act block-diagonally on a system register (every construction
here does) are stored as stacked blocks of shape ``(X, D, D)``: block ``x`` is
the action on ``|x> (x) aux``.  ``dense()`` assembles the full matrix with the
system register as the most significant qubits.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (CertificationError, ConfigurationError, DomainError, PremiseError,
                     RangeError, ValidationError)
from .grid import GridSpec, label_array
from .statevec import StateVector, apply_diagonal_phase, is_unitary

AMPLIFICATION_ROUNDS = 2
QUERIES_PER_GROVER = 2  # U_p and U_p^dagger


# --- ledger ---

@dataclass(frozen=True)
class CallRecord:
    power: float
    controlled: bool = False
    inverse: bool = False


class QueryLedger:
    """Monotone query counters; safe to share between threads."""

    def __init__(self, keep_notes: bool = True):
        self._lock = threading.Lock()
        self.probability_queries = 0
        self.phase_query_units = 0
        self.keep_notes = keep_notes
        self.calls: list[CallRecord] = []

    @staticmethod
    def units(power: float) -> int:
        return math.ceil(abs(power)) if power != 0 else 0

    def charge_phase(self, power: float, controlled: bool = False, inverse: bool = False) -> int:
        if not math.isfinite(power):
            raise DomainError(f"non-finite oracle power {power!r}")
        cost = self.units(power)
        with self._lock:
            self.phase_query_units += cost
            if self.keep_notes:
                self.calls.append(CallRecord(float(power), controlled, inverse))
        return cost

    def charge_probability(self, count: int) -> None:
        if count < 0:
            raise DomainError("query counts are nonnegative")
        with self._lock:
            self.probability_queries += int(count)

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "probability_queries": self.probability_queries,
                "phase_query_units": self.phase_query_units,
                "calls": [{"power": c.power, "controlled": c.controlled, "inverse": c.inverse}
                          for c in self.calls],
            }

    def to_json(self) -> str:
        return json.dumps(self.snapshot(), sort_keys=True)


# --- oracle objects ---

PointFn = Callable[[np.ndarray], np.ndarray]


@dataclass
class PhaseOracle:
    """O_f: |x> -> e^(i f(x)) |x>; ``f`` maps points of shape (B, d) to (B,)."""

    f: PointFn
    ledger: QueryLedger = field(default_factory=QueryLedger)

    def values(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.f(np.atleast_2d(points)), dtype=float).reshape(-1)

    def charge(self, power: float, controlled: bool = False, inverse: bool = False) -> int:
        return self.ledger.charge_phase(power, controlled, inverse)

    def apply(self, state: StateVector, power: float, grid: GridSpec,
              controlled: bool = False, inverse: bool = False) -> StateVector:
        """Apply O_f^t on a grid register block, evaluating f at y + r x."""
        t = -power if inverse else power
        y = np.asarray(grid.y)
        apply_diagonal_phase(state, lambda x: t * self.values(y + grid.r * x))
        self.charge(power, controlled, inverse)
        return state


@dataclass
class ProbabilityOracle:
    """Block-diagonal U_p; the last auxiliary qubit is the indicator."""

    blocks: np.ndarray
    n_aux: int
    ledger: QueryLedger = field(default_factory=QueryLedger)

    @property
    def system_size(self) -> int:
        return self.blocks.shape[0]

    @property
    def p(self) -> np.ndarray:
        col = self.blocks[:, :, 0]
        return (np.abs(col[:, 1::2]) ** 2).sum(axis=1)

    def dense(self) -> np.ndarray:
        return block_dense(self.blocks)

    @classmethod
    def from_unitary(cls, matrix: np.ndarray, system_qubits: int, n_aux: int) -> "ProbabilityOracle":
        return cls(extract_blocks(matrix, system_qubits, n_aux), n_aux)


@dataclass(frozen=True)
class BinaryOracleCostModel:
    """Cost C(eta) of an eta-accurate binary oracle; accounting only."""

    cost: Callable[[float], float] = lambda eta: math.log2(1 / eta)

    def phase_query_cost(self, scale: float, delta: float = 0.1) -> float:
        """Binary-oracle cost of one phase query O^S at phase error delta (eta = delta/|S|)."""
        if scale == 0:
            return 0.0
        return float(self.cost(delta / abs(scale)))


# --- block helpers ---

def block_dense(blocks: np.ndarray) -> np.ndarray:
    X, D, _ = blocks.shape
    out = np.zeros((X * D, X * D), dtype=np.complex128)
    for x in range(X):
        out[x * D:(x + 1) * D, x * D:(x + 1) * D] = blocks[x]
    return out


def extract_blocks(matrix: np.ndarray, system_qubits: int, aux_qubits: int, tol: float = 1e-10) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.complex128)
    X, D = 1 << system_qubits, 1 << aux_qubits
    if matrix.shape != (X * D, X * D):
        raise ValidationError(f"matrix shape {matrix.shape} does not match {system_qubits}+{aux_qubits} qubits")
    t = matrix.reshape(X, D, X, D)
    blocks = np.stack([t[x, :, x, :] for x in range(X)])
    off = t.copy()
    for x in range(X):
        off[x, :, x, :] = 0
    if np.abs(off).max(initial=0.0) > tol:
        raise ValidationError("operator does not act as a controlled map on the system register")
    return blocks


def _check_blocks_unitary(blocks: np.ndarray, tol: float = 1e-10) -> None:
    eye = np.eye(blocks.shape[1])
    err = np.abs(np.conj(np.swapaxes(blocks, 1, 2)) @ blocks - eye).max()
    if err > tol:
        raise ValidationError(f"blocks are not unitary (error {err:.2e})")


def build_probability_oracle(p, n_aux: int = 1, grid: GridSpec | None = None,
                             ledger: QueryLedger | None = None) -> ProbabilityOracle:
    """Givens-rotation oracle |x>|0> -> sqrt(p)|x>|0..01> + sqrt(1-p)|x>|0..00>.

    ``p`` is a table with one value per system basis state, or a point function
    evaluated on ``grid``.
    """
    if n_aux < 1:
        raise ConfigurationError("need at least one auxiliary qubit")
    if callable(p):
        if grid is None:
            raise ConfigurationError("a grid is required to tabulate a p function")
        pts = np.asarray(grid.y) + grid.r * label_array(grid.n, grid.d, limit=12)
        p = np.asarray(p(pts), dtype=float)
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size == 0 or p.size & (p.size - 1):
        raise ConfigurationError("probability table length must be a power of two")
    if (p < -1e-12).any() or (p > 1 + 1e-12).any() or not np.isfinite(p).all():
        raise DomainError("probabilities must lie in [0, 1]")
    p = np.clip(p, 0.0, 1.0)
    D = 1 << n_aux
    blocks = np.tile(np.eye(D, dtype=np.complex128), (p.size, 1, 1))
    s, c = np.sqrt(p), np.sqrt(1 - p)
    blocks[:, 0, 0] = c
    blocks[:, 1, 0] = s
    blocks[:, 0, 1] = -s
    blocks[:, 1, 1] = c
    return ProbabilityOracle(blocks, n_aux, ledger or QueryLedger())


def _aux_projectors(D: int) -> tuple[np.ndarray, np.ndarray]:
    zero = np.zeros(D)
    zero[0] = 1.0
    indicator = (np.arange(D) % 2 == 1).astype(float)
    return zero, indicator


def grover_blocks(blocks: np.ndarray) -> np.ndarray:
    """-(2 Pi_1 - I) U^dagger (2 Pi_2 - I) U per block.

    The overall -1 makes the invariant 2-D block a rotation with eigenvalues
    e^(+-2i theta); without it the eigenvalues are -e^(+-2i theta).
    """
    D = blocks.shape[1]
    zero, ind = _aux_projectors(D)
    r1 = 2 * zero - 1
    r2 = 2 * ind - 1
    udag = np.conj(np.swapaxes(blocks, 1, 2))
    return -(r1[None, :, None] * (udag @ (r2[None, :, None] * blocks)))


def grover_operator(oracle: ProbabilityOracle | np.ndarray, system_qubits: int | None = None,
                    n_aux: int | None = None) -> np.ndarray:
    """Dense G_U for an oracle object or a dense U_p with the given layout."""
    if isinstance(oracle, ProbabilityOracle):
        return block_dense(grover_blocks(oracle.blocks))
    blocks = extract_blocks(oracle, system_qubits, n_aux)
    return block_dense(grover_blocks(blocks))


def invariant_eigenphases(G_block: np.ndarray, v: np.ndarray | None = None) -> np.ndarray:
    """Eigenphases of G restricted to Span{v, G v} (v defaults to |0>)."""
    D = G_block.shape[0]
    if v is None:
        v = np.zeros(D, dtype=np.complex128)
        v[0] = 1
    basis = np.column_stack([v, G_block @ v])
    q, r = np.linalg.qr(basis)
    if abs(r[1, 1]) < 1e-12:  # v is an eigenvector
        return np.array([np.angle(np.vdot(v, G_block @ v))])
    sub = np.conj(q.T) @ G_block @ q
    return np.sort(np.angle(np.linalg.eigvals(sub)))


# --- LCU coefficients ---

@dataclass(frozen=True)
class LcuCoefficients:
    M: int
    t: float
    beta: np.ndarray  # index m + M

    @property
    def l1(self) -> float:
        return float(np.abs(self.beta).sum())

    def series(self, theta: np.ndarray) -> np.ndarray:
        m = np.arange(-self.M, self.M + 1)
        return np.exp(2j * np.outer(np.atleast_1d(theta), m)) @ self.beta

    def truncation_error(self, points: int = 2049) -> float:
        theta = np.linspace(0, math.pi, points)
        return float(np.abs(np.exp(1j * self.t * np.sin(theta) ** 2) - self.series(theta)).max())


def lcu_beta(M: int, t: float = 1.0, certify: bool = True) -> LcuCoefficients:
    """beta_m = sum_{k=|m|}^M C(2k,k-m) (-1)^m (i t)^k / (k! 4^k) for e^(i t sin^2 theta)."""
    if not isinstance(M, (int, np.integer)) or M < 0:
        raise ConfigurationError(f"M must be a nonnegative integer, got {M!r}")
    if M > 60:
        raise RangeError("M > 60 is outside the supported range")
    if abs(t) > 1:
        raise DomainError("fractional power must satisfy |t| <= 1")
    beta = np.zeros(2 * M + 1, dtype=np.complex128)
    for m in range(-M, M + 1):
        acc = 0j
        for k in range(abs(m), M + 1):
            acc += math.comb(2 * k, k - m) * (1j * t) ** k / (math.factorial(k) * 4.0 ** k)
        beta[m + M] = (-1) ** (m % 2) * acc
    coeffs = LcuCoefficients(int(M), float(t), beta)
    if certify:
        err = coeffs.truncation_error()
        if err > 1 / math.factorial(M) + 1e-12:
            raise CertificationError(f"truncation error {err:.3e} exceeds 1/M!", err)
    return coeffs


def choose_M(eps: float) -> int:
    """Smallest M >= 1 with (e/M)^M <= eps/10."""
    if not 0 < eps < 1:
        raise DomainError("accuracy must lie in (0, 1)")
    target = math.log(eps / 10)
    M = 1
    while M * (1 - math.log(M)) > target:
        M += 1
    return M


def asymptotic_M(eps: float) -> float:
    """The closed-form sufficient choice 2 ln(1/eps') / ln ln(1/eps'), eps' = eps/10."""
    inv = 10 / eps
    return 2 * math.log(inv) / math.log(math.log(inv))


def conversion_queries(M: int, k: int = AMPLIFICATION_ROUNDS) -> int:
    """Probability-oracle queries for one converted phase query."""
    return 2 * (2 * k + 1) * M * QUERIES_PER_GROVER


# --- oblivious amplitude amplification ---

def _reflection_diag(mask: np.ndarray) -> np.ndarray:
    return 2 * mask.astype(float) - 1


def _oaa_power(W: np.ndarray, r1: np.ndarray, r2: np.ndarray, k: int) -> np.ndarray:
    """(-W R1 W^dagger R2)^k W for block stacks or single matrices (R1, R2 diagonal)."""
    Wd = np.conj(np.swapaxes(W, -1, -2))
    out = W
    for _ in range(k):
        step = r2[..., :, None] * out
        step = Wd @ step
        step = r1[..., :, None] * step
        out = -(W @ step)
    return out


@dataclass
class AmplificationResult:
    unitary: np.ndarray
    deviation: float | None
    precondition_deviation: float | None
    worst_state: np.ndarray | None


def _projector_basis(P: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    P = np.asarray(P, dtype=np.complex128)
    if np.abs(P @ P - P).max() > tol or np.abs(P - P.conj().T).max() > tol:
        raise ValidationError("not an orthogonal projector")
    w, v = np.linalg.eigh(P)
    return v[:, w > 0.5]


def oblivious_amplitude_amplify(W: np.ndarray, Pi1: np.ndarray, Pi2: np.ndarray, k: int,
                                target: np.ndarray | None = None, eps: float | None = None,
                                tol: float = 1e-9) -> AmplificationResult:
    """G^k W with G = -W (2Pi1 - I) W^dagger (2Pi2 - I).

    With ``target`` (a matrix U with U|psi> defined on Im(Pi1)) the result is
    certified: the operator norm of (G^k W - U) on Im(Pi1) must be <= 10 eps.
    """
    if k < 0:
        raise ConfigurationError("k must be nonnegative")
    W = np.asarray(W, dtype=np.complex128)
    if not is_unitary(W):
        raise ValidationError("W is not unitary")
    if k == 0:
        out = W.copy()
    else:
        D = W.shape[0]
        I = np.eye(D)
        R1 = 2 * np.asarray(Pi1) - I
        R2 = 2 * np.asarray(Pi2) - I
        G = -(W @ R1 @ W.conj().T @ R2)
        out = np.linalg.matrix_power(G, k) @ W
    if target is None:
        return AmplificationResult(out, None, None, None)
    basis = _projector_basis(Pi1)
    target = np.asarray(target, dtype=np.complex128)
    s = math.sin(math.pi / (2 * (2 * k + 1)))
    pre = np.asarray(Pi2) @ W @ basis - s * (target @ basis)
    pre_dev = float(np.linalg.norm(pre, 2)) / s
    if eps is not None and pre_dev > eps * (1 + 1e-9) + tol:
        _, _, vh = np.linalg.svd(pre)
        err = PremiseError(f"precondition violated: deviation {pre_dev:.3e} > eps={eps:.3e}")
        err.worst_state = basis @ np.conj(vh[0])
        raise err
    diff = (out - target) @ basis
    _, sv, vh = np.linalg.svd(diff)
    worst = basis @ np.conj(vh[0])
    return AmplificationResult(out, float(sv[0]), pre_dev, worst)


# --- probability -> phase conversion ---

def _householder_from(v: np.ndarray) -> np.ndarray:
    """Real orthogonal matrix whose first column is the unit vector v."""
    L = v.size
    e = np.zeros(L)
    e[0] = 1.0
    w = v - e
    nw = np.linalg.norm(w)
    if nw < 1e-15:
        return np.eye(L)
    w /= nw
    return np.eye(L) - 2 * np.outer(w, w)


@dataclass
class PhaseConversion:
    """One converted (fractional) phase query O ~ diag(e^(i t p))."""

    blocks: np.ndarray
    p: np.ndarray
    t: float
    M: int
    k: int
    coefficients: LcuCoefficients
    eps: float
    max_deviation: float
    aux_qubits: int
    prep_qubits: int
    queries_per_call: int

    @property
    def ancilla_qubits(self) -> int:
        """Auxiliary qubits of U_p plus the LCU register (including the rotation qubit)."""
        return self.aux_qubits + self.prep_qubits + 1

    @property
    def query_constant(self) -> float:
        """Reported C with queries = C * log2(1/eps)."""
        return self.queries_per_call / math.log2(1 / self.eps)

    def dense(self) -> np.ndarray:
        return block_dense(self.blocks)

    def columns(self) -> np.ndarray:
        """O|x>|0> for every x, shape (X, D)."""
        return self.blocks[:, :, 0]


def _conversion_blocks(blocks: np.ndarray, coeffs: LcuCoefficients, k: int):
    X, A, _ = blocks.shape
    M = coeffs.M
    prep_qubits = max(1, math.ceil(math.log2(2 * M + 1)))
    L = 1 << prep_qubits
    beta = coeffs.beta
    l1 = coeffs.l1
    amp = np.zeros(L)
    amp[:2 * M + 1] = np.sqrt(np.abs(beta) / l1)
    prep = _householder_from(amp)
    phases = np.exp(1j * np.angle(beta))

    G = grover_blocks(blocks)
    Ginv = np.conj(np.swapaxes(G, 1, 2))
    powers = np.empty((2 * M + 1, X, A, A), dtype=np.complex128)
    powers[M] = np.eye(A)
    for m in range(1, M + 1):
        powers[M + m] = G @ powers[M + m - 1]
        powers[M - m] = Ginv @ powers[M - m + 1]
    # SELECT on (aux, prep): block j holds e^(i phi_m) G^m, identity on unused indices
    sel = np.zeros((X, A, L, A, L), dtype=np.complex128)
    for j in range(L):
        sel[:, :, j, :, j] = phases[j] * powers[j] if j < 2 * M + 1 else np.eye(A)
    sel = sel.reshape(X, A * L, A * L)
    P = np.kron(np.eye(A), prep)
    V = P.T @ sel @ P  # prep is real orthogonal
    s = math.sin(math.pi / 10) * l1
    if s > 1:
        raise CertificationError(f"rotation amplitude {s:.3f} exceeds 1")
    R = np.array([[s, -math.sqrt(1 - s * s)], [math.sqrt(1 - s * s), s]])
    W = np.einsum("xab,cd->xacbd", V, R).reshape(X, 2 * A * L, 2 * A * L)
    D = 2 * A * L
    idx = np.arange(D)
    pi1 = (idx == 0)
    pi2 = (idx % (2 * L) == 0)  # prep and rotation qubit at zero, any aux
    out = _oaa_power(W, _reflection_diag(pi1), _reflection_diag(pi2), k)
    return out, prep_qubits


def probability_to_phase(oracle: ProbabilityOracle, eps: float, t: float = 1.0,
                         k: int = AMPLIFICATION_ROUNDS, M: int | None = None,
                         charge: bool = True) -> PhaseConversion:
    """LCU over Grover powers plus k rounds of oblivious amplitude amplification.

    Certifies max_x ||O|x>|0> - e^(i t p(x))|x>|0>|| <= eps and charges one
    converted call to the oracle's ledger.
    """
    if not 0 < eps < 1 / 3:
        raise DomainError("accuracy must lie in (0, 1/3)")
    if abs(t) > 1:
        raise DomainError("fractional power must satisfy |t| <= 1")
    blocks = np.asarray(oracle.blocks, dtype=np.complex128)
    _check_blocks_unitary(blocks)
    M = choose_M(eps) if M is None else M
    coeffs = lcu_beta(M, t)
    prep_qubits = max(1, math.ceil(math.log2(2 * M + 1)))
    total_qubits = math.log2(blocks.shape[0]) + oracle.n_aux + prep_qubits + 1
    if total_qubits > 22:
        raise ConfigurationError(f"{total_qubits:.0f} qubits exceed the dense-simulation limit of 22")
    out, prep_qubits = _conversion_blocks(blocks, coeffs, k)
    p = oracle.p
    target = np.exp(1j * t * p)
    cols = out[:, :, 0].copy()
    cols[:, 0] -= target
    dev = float(np.linalg.norm(cols, axis=1).max())
    queries = conversion_queries(M, k)
    conv = PhaseConversion(out, p, t, M, k, coeffs, eps, dev, oracle.n_aux, prep_qubits, queries)
    if dev > eps:
        raise CertificationError(f"converted oracle deviates by {dev:.3e} > eps={eps:.3e}", dev)
    if charge:
        oracle.ledger.charge_probability(queries)
    return conv


# --- distribution Hamiltonian simulation ---

def _perm_matrix(perm: Sequence[int]) -> np.ndarray:
    """Permutation of qubits: new qubit i is old qubit perm[i]."""
    q = len(perm)
    idx = np.arange(1 << q).reshape((2,) * q)
    idx = np.transpose(idx, perm).reshape(-1)
    P = np.zeros((1 << q, 1 << q))
    P[np.arange(1 << q), idx] = 1.0
    return P


def distribution_probability_oracle(U: np.ndarray, system_qubits: int, junk_qubits: int = 0,
                                    ledger: QueryLedger | None = None) -> ProbabilityOracle:
    """U_p from a state-preparation unitary U|0>|0> = sum_x sqrt(p(x)) |x>|psi_x>.

    Layout of the result: system x, then aux (y, junk, indicator).
    """
    s, j = system_qubits, junk_qubits
    U = np.asarray(U, dtype=np.complex128)
    if U.shape != (1 << (s + j), 1 << (s + j)) or not is_unitary(U):
        raise ValidationError("distribution oracle must be a unitary on system + junk qubits")
    X, Y = 1 << s, 1 << s
    H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    # construction order of qubits: x (s), y (s), b (1), junk (j)
    Ij = np.eye(1 << j)
    Hb = np.kron(np.kron(np.eye(X * Y), H), Ij)
    # U acts on (y, junk); move b out of the way: build on (x, y, junk, b) then permute
    Uyj = np.kron(np.kron(np.eye(X), U), np.eye(2))
    to_yjb = _perm_matrix(list(range(2 * s)) + [2 * s + 1 + i for i in range(j)] + [2 * s])
    Uyb = to_yjb.T @ Uyj @ to_yjb
    diag = np.ones(X * Y * 2 * (1 << j), dtype=np.complex128)
    idx = np.arange(diag.size)
    xi = idx >> (s + 1 + j)
    yi = (idx >> (1 + j)) & (Y - 1)
    bi = (idx >> j) & 1
    diag[(xi == yi) & (bi == 1)] = -1.0
    CP = np.diag(diag)
    Up = to_yjb @ (Hb @ CP @ Uyb @ Hb)  # final SWAP: indicator b moved last
    return ProbabilityOracle.from_unitary(Up, s, s + j + 1) if ledger is None else \
        ProbabilityOracle(extract_blocks(Up, s, s + j + 1), s + j + 1, ledger)


@dataclass
class HamiltonianSimulation:
    blocks: np.ndarray
    p: np.ndarray
    t: float
    rounds: int
    fraction: float
    deviation: float
    queries: int
    conversion: PhaseConversion | None

    def dense(self) -> np.ndarray:
        return block_dense(self.blocks)


def distribution_hamiltonian_simulation(U: np.ndarray, t: float, eps: float, system_qubits: int,
                                        junk_qubits: int = 0,
                                        ledger: QueryLedger | None = None) -> HamiltonianSimulation:
    """~ e^(i t sum_x p(x)|x><x|) from ceil|t| converted fractional queries of power t/ceil|t|."""
    ledger = ledger or QueryLedger()
    oracle = distribution_probability_oracle(U, system_qubits, junk_qubits, ledger)
    rounds = math.ceil(abs(t))
    p = oracle.p
    if rounds == 0:
        D = oracle.blocks.shape[1]
        eye = np.tile(np.eye(D, dtype=np.complex128), (oracle.system_size, 1, 1))
        return HamiltonianSimulation(eye, p, t, 0, 0.0, 0.0, 0, None)
    frac = t / rounds
    conv = probability_to_phase(oracle, min(eps / rounds, 0.3), t=frac, charge=False)
    total = conv.blocks
    for _ in range(rounds - 1):
        total = conv.blocks @ total
    for _ in range(rounds):
        ledger.charge_probability(conv.queries_per_call)
    cols = total[:, :, 0].copy()
    cols[:, 0] -= np.exp(1j * t * p)
    dev = float(np.linalg.norm(cols, axis=1).max())
    if dev > eps:
        raise CertificationError(f"Hamiltonian simulation deviates by {dev:.3e} > {eps:.3e}", dev)
    return HamiltonianSimulation(total, p, t, rounds, frac, dev, rounds * conv.queries_per_call, conv)
