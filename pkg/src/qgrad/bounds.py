"""Hybrid-method lower bound, the hard function family and its derivative certificate."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PremiseError, QGradError


class CertificateFailure(QGradError):
    """A derivative certificate did not hold (indicates an implementation bug)."""


STAR = "*"


@dataclass(frozen=True)
class HardFamily:
    """f_j(x) = 2 eps x_j exp(-c^2 |x|^2 / 2) for j = 1..d, plus f_* = 0."""

    d: int
    eps: float
    c: float

    def eval(self, j, x) -> float | np.ndarray:
        return hard_family_eval(j, x, self.eps, self.c)

    def gradient_at_zero(self, j) -> np.ndarray:
        g = np.zeros(self.d)
        if j != STAR:
            g[j - 1] = 2 * self.eps
        return g

    def table(self, points: np.ndarray) -> np.ndarray:
        """Values of f_1..f_d on points of shape (P, d); result shape (d, P)."""
        pts = np.atleast_2d(points)
        env = 2 * self.eps * np.exp(-self.c ** 2 * (pts ** 2).sum(axis=1) / 2)
        return (pts * env[:, None]).T

    def sum_bound(self) -> float:
        return 4 * self.eps ** 2 / (math.e * self.c ** 2)


def hard_family_eval(j, x, eps: float, c: float):
    """f_j(x) (1-based j) or f_*(x) = 0; x may be a batch of shape (P, d)."""
    x = np.asarray(x, dtype=float)
    if j == STAR:
        return np.zeros(x.shape[:-1]) if x.ndim > 1 else 0.0
    env = 2 * eps * np.exp(-c ** 2 * (x ** 2).sum(axis=-1) / 2)
    val = x[..., j - 1] * env
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class HybridBound:
    value: float
    infinite: bool
    max_sum: float
    family_size: int


def hybrid_lower_bound(values: np.ndarray, reference: np.ndarray | None = None) -> HybridBound:
    """T = (sqrt|F|/3) / sqrt(max_x sum_f min(|f(x) - f_*(x)|^2, 4)).

    ``values`` has shape (|F|, |G|); ``reference`` has shape (|G|,) (zeros by default).
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[0] < 1 or values.shape[1] < 1:
        raise PremiseError("need at least one function and one point")
    ref = np.zeros(values.shape[1]) if reference is None else np.asarray(reference, dtype=float)
    gaps = np.minimum((values - ref[None, :]) ** 2, 4.0).sum(axis=0)
    worst = float(gaps.max())
    size = values.shape[0]
    if worst == 0:
        return HybridBound(math.inf, True, 0.0, size)
    return HybridBound(math.sqrt(size) / 3 / math.sqrt(worst), False, worst, size)


def gradient_lower_bound(c: float, eps: float, d: int) -> float:
    """c sqrt(d) / (4 eps), valid when 2 eps <= c."""
    if 2 * eps > c:
        raise PremiseError(f"lower bound needs 2 eps <= c (eps={eps}, c={c})")
    return c * math.sqrt(d) / (4 * eps)


def hybrid_constant(d: int, eps: float, c: float) -> float:
    """Closed form of the hybrid bound on the hard family: sqrt(e) c sqrt(d) / (6 eps)."""
    return math.sqrt(math.e) * c * math.sqrt(d) / (6 * eps)


def radial_points(d: int, c: float, radius: float = 3.0, count: int = 4001) -> np.ndarray:
    """Points s u with u the diagonal unit vector and s in [0, radius/c]."""
    s = np.linspace(0.0, radius / c, count)
    u = np.ones(d) / math.sqrt(d)
    return s[:, None] * u[None, :]


# --- derivative certificate ---

def _even_factor(k: int, c: float) -> float:
    """k-th derivative at 0 of exp(-c^2 x^2 / 2)."""
    if k % 2:
        return 0.0
    l = k // 2
    return (-0.5) ** l * c ** (2 * l) * math.factorial(2 * l) / math.factorial(l)


def _odd_factor(k: int, c: float) -> float:
    """k-th derivative at 0 of c x exp(-c^2 x^2 / 2)."""
    if k % 2 == 0:
        return 0.0
    l = (k - 1) // 2
    return (-0.5) ** l * c ** (2 * l + 1) * math.factorial(2 * l + 1) / math.factorial(l)


def hard_family_derivative(j: int, alpha: Sequence[int], c: float, prefactor: float | None = None) -> float:
    """d_alpha f_j(0) for f_j = prefactor * x_j e^(-c^2|x|^2/2); alpha lists 1-based indices.

    With ``prefactor=None`` the normalization c x_j e^(...) is used.
    """
    counts: dict[int, int] = {}
    for a in alpha:
        counts[a] = counts.get(a, 0) + 1
    val = _odd_factor(counts.get(j, 0), c)
    for idx, k in counts.items():
        if idx != j:
            val *= _even_factor(k, c)
    if prefactor is not None:
        val *= prefactor / c
    return val


@dataclass(frozen=True)
class DerivativeCertificate:
    checked: int
    worst_ratio: float
    gradient_ok: bool


def hard_family_derivative_certificate(j: int, c: float, k_max: int, d: int = 3,
                                       eps: float | None = None) -> DerivativeCertificate:
    """Check |d_alpha f_j(0)| <= c^k k^(k/2) for all alpha with |alpha| <= k_max.

    Checks the c-prefactor normalization and, when ``eps`` is given (2 eps <= c),
    the 2 eps prefactor as well.
    """
    if k_max > 8:
        raise PremiseError("certificate limited to k_max <= 8")
    if not 1 <= j <= d:
        raise PremiseError("member index must be in 1..d")
    prefactors = [None] + ([2 * eps] if eps is not None else [])
    worst, checked = 0.0, 0
    for pf in prefactors:
        for k in range(1, k_max + 1):
            bound = c ** k * k ** (k / 2)
            for alpha in itertools.combinations_with_replacement(range(1, d + 1), k):
                val = hard_family_derivative(j, alpha, c, pf)
                checked += 1
                ratio = abs(val) / bound
                worst = max(worst, ratio)
                if ratio > 1 + 1e-12:
                    raise CertificateFailure(f"|d_{alpha} f_{j}(0)| = {abs(val):.4g} exceeds {bound:.4g}")
    grad = [hard_family_derivative(j, (i,), c) for i in range(1, d + 1)]
    expected = [c if i == j else 0.0 for i in range(1, d + 1)]
    ok = np.allclose(grad, expected, rtol=0, atol=1e-14)
    if not ok:
        raise CertificateFailure(f"gradient {grad} differs from c e_j")
    return DerivativeCertificate(checked, worst, bool(ok))


def sandwich_check(measured_units: float, hybrid_T: float, d: int, eps: float) -> dict:
    """Compare an algorithm's cost with the lower bound under polylog slack 64 log^2(d/eps)."""
    slack = 64 * math.log(max(d / eps, math.e)) ** 2
    return {"measured": measured_units, "lower": hybrid_T, "slack": slack,
            "ok": measured_units >= hybrid_T / slack}
