"""Baseline estimators, scaling experiments and CSV persistence.

Query-cost units per method:

* ``classical-sampling``: Bernoulli samples of p.
* ``semi-classical``: modeled amplitude-estimation queries, ceil(pi/eps') per evaluation.
* ``jordan-original``, ``improved-smooth``, ``improved-polynomial``: phase-oracle units
  from the query ledger (ceil(|t|) per fractional power t).
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, ResourceError
from .gradient import GradientJob, prepare
from .grid import MAX_GRID_QUBITS
from .oracles import PhaseOracle, QueryLedger
from .stencil import central_coefficients, lagrange_error_bound

METHODS = ("classical-sampling", "semi-classical", "jordan-original", "improved-smooth",
           "improved-polynomial")
QUANTUM_METHODS = METHODS[2:]
CSV_COLUMNS = ("method", "d", "eps", "err_inf", "query_cost", "repetitions", "seed", "wall_ms", "status")
AMPLITUDE_ESTIMATION_CONSTANT = math.pi


# --- objective ---

def sin_sum(points: np.ndarray) -> np.ndarray:
    return np.sin(np.atleast_2d(points).sum(axis=1))


def sin_sum_gradient(y: Sequence[float]) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return np.full(y.size, math.cos(y.sum()))


# --- classical baselines ---

@dataclass
class BaselineResult:
    estimate: np.ndarray
    queries: int


def classical_gradient_sampling(p_sampler: Callable[[np.ndarray, int, np.random.Generator], int] | Callable,
                                x, eps: float, delta_step: float, seed=0,
                                exact: bool = False) -> BaselineResult:
    """Forward differences of p, each value estimated from ceil(4/eps^2) Bernoulli samples.

    ``p_sampler(point, shots, rng)`` returns the number of ones; with ``exact=True``
    the callable is instead p itself and samples are drawn from Binomial(shots, p).
    """
    if delta_step <= 0 or eps <= 0:
        raise ConfigurationError("eps and delta_step must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    rng = np.random.default_rng(seed)
    shots = math.ceil(4 / eps ** 2)

    def estimate(point: np.ndarray) -> float:
        if exact:
            p = float(p_sampler(point))
            if not 0 <= p <= 1:
                raise ConfigurationError(f"p = {p} is not a probability")
            return rng.binomial(shots, p) / shots
        return p_sampler(point, shots, rng) / shots

    p0 = estimate(x)
    grad = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = delta_step
        grad[i] = (estimate(x + e) - p0) / delta_step
    return BaselineResult(grad, (x.size + 1) * shots)


def semiclassical_step(m: int, eps: float, B: float = 1.0) -> float:
    """Largest delta (<= 1/2) with stencil truncation error per unit step at most eps/2."""
    delta = 0.5
    while delta > 1e-12 and lagrange_error_bound(m, B, delta) / delta > eps / 2:
        delta /= 2 ** 0.25
    return delta


def semiclassical_gradient(f: Callable[[np.ndarray], np.ndarray], x, eps: float, m: int = 3, seed=0,
                           B: float = 1.0, delta: float | None = None, noise: bool = True) -> BaselineResult:
    """Stencil derivative with evaluations modeled as amplitude estimation.

    Each evaluation returns f + U[-eps', eps'] for cost ceil(pi/eps'); eps' is set so
    the propagated noise adds at most eps/2 to each partial derivative.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    rng = np.random.default_rng(seed)
    scheme = central_coefficients(m)
    delta = semiclassical_step(m, eps, B) if delta is None else delta
    eps_eval = eps * delta / (2 * 2 * scheme.l1_half())
    per_eval = math.ceil(AMPLITUDE_ESTIMATION_CONSTANT / eps_eval)
    grad = np.empty(x.size)
    pos = scheme.positive
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = delta
        ells = np.arange(1, m + 1)[:, None]
        plus = np.asarray(f(x + ells * e), dtype=float)
        minus = np.asarray(f(x - ells * e), dtype=float)
        err = rng.uniform(-eps_eval, eps_eval, size=(2, m)) if noise else np.zeros((2, m))
        grad[i] = float(pos @ ((plus + err[0]) - (minus + err[1]))) / delta
    return BaselineResult(grad, x.size * 2 * m * per_eval)


# --- quantum jobs per method ---

def jordan_original_job(d: int, eps: float, rho: float, c: float, y) -> GradientJob:
    """m = 1 with S = 2 pi sqrt(d) c^2 / eps^2, i.e. r = 8 pi / (S eps) in the tight scaling."""
    S = 2 * math.pi * math.sqrt(d) * c ** 2 / eps ** 2
    r = 8 * math.pi / (S * eps)
    return GradientJob.build(d, eps, rho, r, c, y, "tight", m=1, c=c)


def polynomial_job(d: int, eps: float, rho: float, y) -> GradientJob:
    """Bounded-derivative pipeline for sin(sum x): directional derivatives <= d^(k/2)."""
    m = max(1, math.ceil(math.log2(math.sqrt(d) / eps)))
    return GradientJob.bounded_derivative(d, eps, rho, m, B=d ** ((2 * m + 1) / 2), R=1.0,
                                          grad_bound=1.0, y=y)


def quantum_job(method: str, d: int, eps: float, rho: float, c: float, y) -> GradientJob:
    if method == "improved-smooth":
        return GradientJob.smooth(d, eps, rho, c, y)
    if method == "jordan-original":
        return jordan_original_job(d, eps, rho, c, y)
    if method == "improved-polynomial":
        return polynomial_job(d, eps, rho, y)
    raise ConfigurationError(f"{method!r} is not a quantum method")


# --- experiments ---

@dataclass
class ExperimentConfig:
    methods: list[str] = field(default_factory=lambda: ["improved-smooth", "classical-sampling"])
    dims: list[int] = field(default_factory=lambda: [1, 2])
    eps_values: list[float] = field(default_factory=lambda: [0.2, 0.1, 0.05])
    trials: int = 3
    seed: int = 0
    rho: float = 1 / 3
    c: float = 1.0
    center: float = 0.2
    delta_step: float = 0.1
    semi_m: int = 3
    timing: bool = False
    max_qubits: int = MAX_GRID_QUBITS

    def __post_init__(self) -> None:
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigurationError(f"unknown methods {bad}; choose from {list(METHODS)}")
        if self.trials < 1 or not self.dims or not self.eps_values:
            raise ConfigurationError("need trials >= 1 and nonempty dims / eps_values")
        if any(d < 1 for d in self.dims) or any(e <= 0 for e in self.eps_values):
            raise ConfigurationError("dims and eps values must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigurationError(f"unknown config keys {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"bad config JSON: {exc}") from None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExperimentRecord:
    method: str
    d: int
    eps: float
    err_inf: float | None
    query_cost: int
    repetitions: int
    seed: int
    wall_ms: float
    status: str

    def row(self) -> list:
        err = "" if self.err_inf is None else f"{self.err_inf:.12g}"
        return [self.method, self.d, f"{self.eps:.12g}", err, self.query_cost, self.repetitions,
                self.seed, f"{self.wall_ms:.3f}" if self.wall_ms else "0", self.status]


def cell_seed(base: int, method: str, d: int, eps: float, trial: int) -> int:
    return zlib.crc32(f"{base}|{method}|{d}|{eps!r}|{trial}".encode()) & 0x7FFFFFFF


def _run_quantum(cfg: ExperimentConfig, method: str, d: int, eps: float, y, truth) -> list[ExperimentRecord]:
    job = quantum_job(method, d, eps, cfg.rho, cfg.c, y)
    seeds = [cell_seed(cfg.seed, method, d, eps, t) for t in range(cfg.trials)]
    if job.n * d > cfg.max_qubits:
        status = f"skipped: {job.n * d} qubits exceeds guard (planned cost only)"
        return [ExperimentRecord(method, d, eps, None, job.planned_units, job.repetitions, s, 0.0, status)
                for s in seeds]
    t0 = time.perf_counter()
    prepared = prepare(sin_sum, job)
    prep_ms = (time.perf_counter() - t0) * 1e3
    out = []
    for s in seeds:
        t1 = time.perf_counter()
        oracle = PhaseOracle(sin_sum, QueryLedger(keep_notes=False))
        rep = prepared.run(s, oracle, truth)
        wall = (time.perf_counter() - t1) * 1e3 + prep_ms if cfg.timing else 0.0
        out.append(ExperimentRecord(method, d, eps, rep.err_inf, oracle.ledger.phase_query_units,
                                    rep.repetitions, s, wall, "ok"))
    return out


def run_cell(cfg: ExperimentConfig, method: str, d: int, eps: float) -> list[ExperimentRecord]:
    y = np.full(d, cfg.center)
    truth = sin_sum_gradient(y)
    if method in QUANTUM_METHODS:
        return _run_quantum(cfg, method, d, eps, y, truth)
    out = []
    for t in range(cfg.trials):
        s = cell_seed(cfg.seed, method, d, eps, t)
        t0 = time.perf_counter()
        if method == "classical-sampling":
            res = classical_gradient_sampling(lambda p: (1 + sin_sum(p)[0]) / 2, y, eps, cfg.delta_step,
                                              s, exact=True)
            est = 2 * res.estimate  # grad f = 2 grad p
        else:
            res = semiclassical_gradient(sin_sum, y, eps, cfg.semi_m, s)
            est = res.estimate
        wall = (time.perf_counter() - t0) * 1e3 if cfg.timing else 0.0
        err = float(np.abs(est - truth).max())
        out.append(ExperimentRecord(method, d, eps, err, res.queries, 1, s, wall, "ok"))
    return out


def run_scaling_experiment(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    records: list[ExperimentRecord] = []
    for method in cfg.methods:
        for d in cfg.dims:
            for eps in cfg.eps_values:
                try:
                    records.extend(run_cell(cfg, method, d, eps))
                except ResourceError as exc:
                    records.append(ExperimentRecord(method, d, eps, None, 0, 0,
                                                    cell_seed(cfg.seed, method, d, eps, 0), 0.0,
                                                    f"skipped: {exc}"))
    return records


def records_to_csv(records: Sequence[ExperimentRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def write_csv(records: Sequence[ExperimentRecord], path: str | Path) -> None:
    Path(path).write_text(records_to_csv(records))


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def mean_cost(records: Sequence[ExperimentRecord], method: str, d: int, eps: float) -> float:
    vals = [r.query_cost for r in records if r.method == method and r.d == d and r.eps == eps]
    if not vals:
        raise ConfigurationError(f"no records for {method}, d={d}, eps={eps}")
    return float(np.mean(vals))
