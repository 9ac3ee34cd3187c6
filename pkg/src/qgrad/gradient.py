"""Jordan's gradient core, the repeated/median wrapper and the stencil-based pipelines.

Two parameter conventions are supported:

``dyadic``
    h(x) = f(y + r x) / 2^n_M with n = n_eps + n_M, n_eps = ceil(log2(4/(r eps))),
    n_M = ceil(log2(3 r M)).
``tight``
    the same rescaling with a real normaliser lambda = r eps 2^n / 4 and
    n = ceil(log2(12 M / eps)).  The phase scale is then exactly 8 pi/(r eps),
    which avoids power-of-two jumps in cost and can save one qubit per register.

Both satisfy the premises used by the success lemma: slopes of h are at most
1/3 in label units and the output resolution 4 lambda/(r 2^n) is at most eps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, ResourceError
from .grid import MAX_GRID_QUBITS, check_grid_size, grid_labels
from .oracles import PhaseOracle, QueryLedger
from .statevec import (StateVector, apply_diagonal_phase, inverse_qft_grid,
                       measure_registers, sample_indices, uniform_superposition)
from .stencil import DifferenceScheme, analytic_tail_bound, central_coefficients, multidim_error_bound

REPETITION_CONSTANT = 12
LEMMA_PHASE_TOL = 1 / (42 * math.pi)  # allowed |h - affine| in units of 1/N
APPROX_DENOM = 8 * 42 * math.pi  # premise |f(y+rx) - g.rx - c| <= eps r / APPROX_DENOM
SMOOTH_COST_CONSTANT = 6e4  # planned units <= this * smooth_cost_formula (measured, d <= 8)


def repetitions(d: int, rho: float) -> int:
    if not 0 < rho < 1:
        raise ConfigurationError(f"failure probability must lie in (0, 1), got {rho}")
    return max(1, math.ceil(REPETITION_CONSTANT * math.log(d / rho)))


def lower_median(values: np.ndarray, axis: int = 0) -> np.ndarray:
    v = np.sort(np.asarray(values, dtype=float), axis=axis)
    return np.take(v, (v.shape[axis] - 1) // 2, axis=axis)


# --- Jordan core ---

def jordan_state(phase_fn, d: int, n: int) -> StateVector:
    """Uniform superposition, diagonal phase, inverse grid QFT on every register."""
    check_grid_size(n, d)
    state = uniform_superposition(d, n)
    apply_diagonal_phase(state, phase_fn)
    for reg in range(d):
        inverse_qft_grid(state, reg)
    return state


def jordan_core(phase_fn, d: int, n: int, seed) -> np.ndarray:
    """One run of the algorithm; ``phase_fn`` is already scaled to 2 pi 2^n h(x)."""
    return measure_registers(jordan_state(phase_fn, d, n), seed)


def coordinate_failure_mass(dist: np.ndarray, g: Sequence[float], n: int,
                            tol_units: float = 4.0) -> np.ndarray:
    """Exact Pr[|k_i - g_i| > tol/2^n] per coordinate from a tabulated distribution."""
    labels = grid_labels(n)
    out = []
    for i, gi in enumerate(g):
        others = tuple(a for a in range(dist.ndim) if a != i)
        marg = dist.sum(axis=others) if others else dist
        bad = np.abs(labels - gi) > tol_units / (1 << n) + 1e-15
        out.append(float(marg[bad].sum()))
    return np.array(out)


# --- jobs ---

def _ceil_log2(v: float) -> int:
    return math.ceil(math.log2(v) - 1e-12)


@dataclass(frozen=True)
class GradientJob:
    d: int
    y: tuple[float, ...]
    eps: float
    rho: float
    r: float
    grad_bound: float
    n: int
    n_eps: int
    n_M: int
    normalizer: float
    scaling: str
    m: int | None = None
    c: float | None = None
    B: float | None = None
    R: float | None = None

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def phase_scale(self) -> float:
        """S: the phase applied is S * F(y + r x) with F the (stencil) function."""
        return 2 * math.pi * self.N / self.normalizer

    @property
    def output_scale(self) -> float:
        return self.normalizer / self.r

    @property
    def repetitions(self) -> int:
        return repetitions(self.d, self.rho)

    @property
    def scheme(self) -> DifferenceScheme | None:
        return central_coefficients(self.m) if self.m else None

    @property
    def powers(self) -> list[float]:
        """Oracle powers S a_l applied per invocation (one for a direct oracle)."""
        if not self.m:
            return [1.0]
        s = self.phase_scale
        return [s * float(a) for a in self.scheme.coefficients if a != 0]

    @property
    def units_per_invocation(self) -> int:
        return sum(QueryLedger.units(t) for t in self.powers)

    @property
    def planned_units(self) -> int:
        return self.units_per_invocation * self.repetitions

    @property
    def approximation_tolerance(self) -> float:
        return self.eps * self.r / APPROX_DENOM

    @property
    def feasible(self) -> bool:
        return self.n * self.d <= MAX_GRID_QUBITS

    def params(self) -> dict:
        return {"m": self.m, "r": self.r, "S": self.phase_scale, "n": self.n,
                "n_eps": self.n_eps, "n_M": self.n_M}

    # constructors

    @classmethod
    def build(cls, d: int, eps: float, rho: float, r: float, grad_bound: float,
              y: Sequence[float] | None = None, scaling: str = "tight", **extra) -> "GradientJob":
        if d < 1:
            raise ConfigurationError("d must be positive")
        if not (eps > 0 and r > 0 and grad_bound > 0):
            raise ConfigurationError("eps, r and the gradient bound must be positive")
        repetitions(d, rho)
        y = tuple(float(v) for v in (y if y is not None else (0.0,) * d))
        if len(y) != d:
            raise ConfigurationError(f"center has length {len(y)}, expected {d}")
        n_eps = _ceil_log2(4 / (r * eps))
        n_M = _ceil_log2(3 * r * grad_bound)
        while grad_bound * r * 2.0 ** (-n_M) > 1 / 3:
            n_M += 1
        if scaling == "dyadic":
            n = n_eps + n_M
            if n < 1:
                n_eps += 1 - n
                n = 1
            normalizer = 2.0 ** n_M
        elif scaling == "tight":
            n = max(1, _ceil_log2(12 * grad_bound / eps))
            normalizer = r * eps * (1 << n) / 4
        else:
            raise ConfigurationError(f"unknown scaling {scaling!r}")
        job = cls(d=d, y=y, eps=float(eps), rho=float(rho), r=float(r), grad_bound=float(grad_bound),
                  n=n, n_eps=n_eps, n_M=n_M, normalizer=normalizer, scaling=scaling, **extra)
        assert grad_bound * r / normalizer <= 1 / 3 + 1e-12
        assert 4 * job.output_scale / job.N <= eps * (1 + 1e-12)
        return job

    @classmethod
    def smooth(cls, d: int, eps: float, rho: float, c: float, y=None,
               grad_bound: float | None = None, scaling: str = "tight",
               m: int | None = None) -> "GradientJob":
        """Parameters for f with |d_alpha f| <= c^k k^(k/2)."""
        if eps > c:
            raise ConfigurationError(f"accuracy {eps} exceeds the smoothness constant c={c}")
        root_d = math.sqrt(d)
        if m is None:
            m = max(1, math.ceil(math.log2(c * root_d / eps)))
        K = 81 * 8 * 42 * math.pi * c * m * root_d / eps
        r = 1 / (9 * c * m * root_d * K ** (1 / (2 * m)))
        return cls.build(d, eps, rho, r, grad_bound or c, y, scaling, m=m, c=c)

    @classmethod
    def bounded_derivative(cls, d: int, eps: float, rho: float, m: int, B: float, R: float,
                           grad_bound: float, y=None, scaling: str = "tight") -> "GradientJob":
        """Parameters for |d_r^(2m+1) f| <= B on [-R, R]^d around y."""
        if B < 0 or R <= 0:
            raise ConfigurationError("need B >= 0 and R > 0")
        r = 2 * R / m
        if B > 0:
            root_d = math.sqrt(d)
            r_opt = (2 / root_d) * (eps * math.exp(m / 2) / (B * root_d * 4 * 42 * math.pi)) ** (1 / (2 * m))
            r = min(r, r_opt)
        return cls.build(d, eps, rho, r, grad_bound, y, scaling, m=m, B=B, R=R)

    @classmethod
    def stencil(cls, d: int, eps: float, rho: float, m: int, r: float, grad_bound: float, y=None,
                scaling: str = "tight", c: float | None = None, B: float | None = None) -> "GradientJob":
        """Caller-chosen r; the applicable error bound is checked when c or B is known."""
        job = cls.build(d, eps, rho, r, grad_bound, y, scaling, m=m, c=c, B=B)
        job.check_tail()
        return job

    def check_tail(self) -> None:
        if not self.m:
            return
        tol = self.approximation_tolerance
        if self.c is not None:
            tail = analytic_tail_bound(self.r, self.c, self.m, self.d)
        elif self.B is not None:
            tail = multidim_error_bound(self.m, self.B, self.r * math.sqrt(self.d) / 2)
        else:
            return
        if tail > tol:
            raise ConfigurationError(
                f"stencil error bound {tail:.3e} exceeds the tolerance {tol:.3e}; choose a smaller r")


# --- reports ---

@dataclass
class GradientReport:
    estimate: np.ndarray
    raw: np.ndarray
    repetitions: int
    phase_query_units: int
    probability_queries: int
    params: dict
    seed: int | None
    truth: np.ndarray | None = None

    @property
    def err_inf(self) -> float | None:
        if self.truth is None:
            return None
        return float(np.abs(self.estimate - self.truth).max())

    def to_dict(self) -> dict:
        out = {
            "estimate": [float(v) for v in self.estimate],
            "repetitions": self.repetitions,
            "phase_query_units": self.phase_query_units,
            "probability_queries": self.probability_queries,
            "params": self.params,
            "seed": self.seed,
        }
        if self.truth is not None:
            out["truth"] = [float(v) for v in self.truth]
            out["err_inf"] = self.err_inf
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# --- prepared runs ---

def stencil_phase(f: Callable[[np.ndarray], np.ndarray], job: GradientJob) -> Callable[[np.ndarray], np.ndarray]:
    """Label vectors -> S * sum_l a_l f(y + l r x)."""
    y = np.asarray(job.y)
    S = job.phase_scale
    if not job.m:
        return lambda x: S * np.asarray(f(y + job.r * x), dtype=float)
    pos = job.scheme.positive

    def phase(x: np.ndarray) -> np.ndarray:
        acc = np.zeros(x.shape[0])
        for ell, a in enumerate(pos, start=1):
            step = (ell * job.r) * x
            acc += a * (np.asarray(f(y + step), dtype=float) - np.asarray(f(y - step), dtype=float))
        return S * acc

    return phase


@dataclass
class PreparedJob:
    """Exact outcome distribution of one invocation; repetitions are i.i.d. draws from it."""

    job: GradientJob
    probabilities: np.ndarray = field(repr=False)
    registers: tuple[int, ...]

    def run(self, seed, oracle: PhaseOracle | None = None,
            truth=None) -> GradientReport:
        job = self.job
        ledger = oracle.ledger if oracle is not None else QueryLedger(keep_notes=False)
        q0, u0 = ledger.probability_queries, ledger.phase_query_units
        rng = np.random.default_rng(seed)
        reps = job.repetitions
        idx = sample_indices(self.probabilities, rng, reps)
        labels = _decode_labels(self.registers, idx)
        raw = labels * job.output_scale
        for _ in range(reps):
            for t in job.powers:
                if oracle is not None:
                    oracle.charge(t)
                else:
                    ledger.charge_phase(t)
        est = lower_median(raw, axis=0)
        truth_v = None
        if truth is not None:
            truth_v = np.asarray(truth(np.asarray(job.y)) if callable(truth) else truth, dtype=float)
        return GradientReport(est, raw, reps, ledger.phase_query_units - u0,
                              ledger.probability_queries - q0, job.params(),
                              None if isinstance(seed, np.random.Generator) else seed, truth_v)


def _decode_labels(registers: tuple[int, ...], idx: np.ndarray) -> np.ndarray:
    out = np.empty((idx.size, len(registers)))
    flat = np.asarray(idx, dtype=np.int64)
    for axis in range(len(registers) - 1, -1, -1):
        size = 1 << registers[axis]
        out[:, axis] = ((flat % size) + 0.5) / size - 0.5
        flat = flat // size
    return out


def prepare(f: Callable[[np.ndarray], np.ndarray], job: GradientJob) -> PreparedJob:
    """Simulate one invocation exactly (stencil phase if ``job.m`` is set)."""
    if not job.feasible:
        raise ResourceError(f"grid of {job.n}x{job.d} qubits exceeds the {MAX_GRID_QUBITS}-qubit guard")
    state = jordan_state(stencil_phase(f, job), job.d, job.n)
    probs = np.abs(state.amplitudes) ** 2
    probs /= probs.sum()
    return PreparedJob(job, probs, state.registers)


def estimate_gradient_affine(oracle: PhaseOracle, job: GradientJob, seed=0, truth=None) -> GradientReport:
    """Repeated Jordan runs with the modified oracle e^(i S f(y + r x)); one unit per run."""
    direct = GradientJob(**{**job.__dict__, "m": None})
    return prepare(oracle.values, direct).run(seed, oracle, truth)


def gradient_via_central_difference(oracle: PhaseOracle, job: GradientJob, seed=0,
                                    truth=None) -> GradientReport:
    """O^S of the stencil as fractional oracle powers S a_l; then the affine estimator."""
    if not job.m:
        raise ConfigurationError("job has no stencil order")
    job.check_tail()
    return prepare(oracle.values, job).run(seed, oracle, truth)


def estimate_gradient_smooth(oracle: PhaseOracle, y, eps: float, rho: float, c: float, seed=0,
                             truth=None, scaling: str = "tight") -> GradientReport:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    job = GradientJob.smooth(y.size, eps, rho, c, y, scaling=scaling)
    return gradient_via_central_difference(oracle, job, seed, truth)


def estimate_gradient_bounded(oracle: PhaseOracle, y, eps: float, rho: float, m: int, B: float,
                              R: float, grad_bound: float, seed=0, truth=None,
                              scaling: str = "tight") -> GradientReport:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    job = GradientJob.bounded_derivative(y.size, eps, rho, m, B, R, grad_bound, y, scaling)
    return gradient_via_central_difference(oracle, job, seed, truth)


def smooth_cost_formula(d: int, eps: float, c: float, rho: float) -> float:
    """(c sqrt d / eps) log(c sqrt d / eps) log log(c sqrt d / eps) log(d / rho), floored logs at e."""
    z = max(c * math.sqrt(d) / eps, math.e ** math.e)
    return z * math.log(z) * math.log(math.log(z)) * math.log(d / rho)
