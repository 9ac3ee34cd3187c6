"""Central-difference stencils and the error/coefficient bounds attached to them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError, RangeError

MAX_M = 10_000
EXACT_M = 256  # rational arithmetic below this size, float recurrence above
_LOG_HUGE = math.log(1e300)


def _ratio_products_exact(m: int) -> list[Fraction]:
    """b_l = C(m,l)/C(m+l,l) for l = 0..m via b_{l+1}/b_l = (m-l)/(m+l+1)."""
    out = [Fraction(1)]
    for ell in range(m):
        out.append(out[-1] * Fraction(m - ell, m + ell + 1))
    return out


def _ratio_products_float(m: int) -> np.ndarray:
    ell = np.arange(m, dtype=float)
    return np.concatenate(([1.0], np.cumprod((m - ell) / (m + ell + 1))))


@dataclass(frozen=True)
class DifferenceScheme:
    """Degree-2m central difference; ``coefficients[m + l]`` is a_l for l = -m..m."""

    m: int
    coefficients: np.ndarray

    @property
    def positive(self) -> np.ndarray:
        """a_1..a_m."""
        return self.coefficients[self.m + 1:]

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.m, self.m + 1)

    def l1_half(self) -> float:
        return float(np.abs(self.positive).sum())

    def phase_units(self, scale: float) -> int:
        """Fractional-query units sum_l ceil(|a_l|*S) to realize O^S of the stencil."""
        return sum(math.ceil(abs(float(a)) * scale) for a in self.coefficients if a != 0)


def central_coefficients(m: int) -> DifferenceScheme:
    if not isinstance(m, (int, np.integer)) or not 1 <= m <= MAX_M:
        raise ConfigurationError(f"m must be in 1..{MAX_M}, got {m!r}")
    m = int(m)
    if m <= EXACT_M:
        b = _ratio_products_exact(m)
        pos = [float(Fraction((-1) ** (ell - 1), ell) * b[ell]) for ell in range(1, m + 1)]
        pos = np.array(pos)
    else:
        b = _ratio_products_float(m)
        ell = np.arange(1, m + 1)
        pos = np.where(ell % 2 == 1, 1.0, -1.0) * b[1:] / ell
    coeffs = np.concatenate((-pos[::-1], [0.0], pos))
    return DifferenceScheme(m=m, coefficients=coeffs)


def exact_coefficients(m: int) -> list[Fraction]:
    """Rational a_1..a_m (small m only)."""
    if not 1 <= m <= EXACT_M:
        raise ConfigurationError(f"exact coefficients limited to m <= {EXACT_M}")
    b = _ratio_products_exact(m)
    return [Fraction((-1) ** (ell - 1), ell) * b[ell] for ell in range(1, m + 1)]


def coefficient_l1(m: int) -> float:
    """sum_{l=1..m} |a_l| using the float recurrence (fast for large m)."""
    if not 1 <= m <= MAX_M:
        raise ConfigurationError(f"m must be in 1..{MAX_M}, got {m!r}")
    b = _ratio_products_float(m)
    return float((b[1:] / np.arange(1, m + 1)).sum())


def apply_scheme(f: Callable[[np.ndarray], float], scheme: DifferenceScheme, x) -> float:
    """sum_l a_l f(l*x), paired as a_l (f(l x) - f(-l x))."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    total = 0.0
    for ell, a in enumerate(scheme.positive, start=1):
        total += a * (float(f(ell * x)) - float(f(-ell * x)))
    return total


def _exp_or_inf(logv: float) -> float:
    return math.inf if logv > 709.0 else math.exp(logv)


def lagrange_error_bound(m: int, sup_norm_B: float, delta: float) -> float:
    """e^(-m/2) * B * delta^(2m+1)."""
    if sup_norm_B < 0 or delta < 0:
        raise DomainError("B and delta must be nonnegative")
    if sup_norm_B == 0 or delta == 0:
        return 0.0
    return _exp_or_inf(-m / 2 + math.log(sup_norm_B) + (2 * m + 1) * math.log(delta))


def multidim_error_bound(m: int, B: float, x_norm: float) -> float:
    """B * e^(-m/2) * ||x||^(2m+1); same formula as the 1-D bound with delta = ||x||."""
    return lagrange_error_bound(m, B, x_norm)


@dataclass(frozen=True)
class PowerSum:
    m: int
    k: int
    log_sum: float
    log_bound: float

    @property
    def holds(self) -> bool:
        return self.log_sum <= self.log_bound + 1e-12

    def _value(self, logv: float) -> float:
        if logv > _LOG_HUGE:
            raise RangeError(f"value e^{logv:.1f} exceeds float range; use log_sum/log_bound")
        return math.exp(logv)

    @property
    def value(self) -> float:
        return self._value(self.log_sum)

    @property
    def bound(self) -> float:
        return self._value(self.log_bound)


def coefficient_power_sum(m: int, k: int, log_space: bool = False) -> PowerSum:
    """sum_l |a_l l^(k+1)| against 6 e^(-7m/6) m^(k+3/2); requires k >= 2m.

    Without ``log_space`` the result must fit in double precision, otherwise
    :class:`RangeError` is raised.
    """
    if m < 1 or k < 2 * m:
        raise DomainError(f"power-sum bound needs m >= 1 and k >= 2m, got m={m}, k={k}")
    b = _ratio_products_float(m)[1:]
    ell = np.arange(1, m + 1, dtype=float)
    logs = np.log(b) + k * np.log(ell)  # |a_l l^(k+1)| = b_l l^k
    top = logs.max()
    log_sum = math.log(2.0) + top + math.log(np.exp(logs - top).sum())
    log_bound = math.log(6.0) - 7 * m / 6 + (k + 1.5) * math.log(m)
    res = PowerSum(m, k, log_sum, log_bound)
    if not log_space and max(log_sum, log_bound) > _LOG_HUGE:
        raise RangeError(f"power sum for m={m}, k={k} overflows; pass log_space=True")
    return res


def analytic_tail_bound(R: float, c: float, m: int, d: int) -> float:
    """sum_{k >= 2m+1} q^k with q = 8 R c m sqrt(d); +inf when divergent."""
    if R <= 0 or c <= 0 or m < 1 or d < 1:
        raise DomainError("R, c must be positive and m, d >= 1")
    q = 8 * R * c * m * math.sqrt(d)
    if q >= 1:
        return math.inf
    return _exp_or_inf((2 * m + 1) * math.log(q) - math.log1p(-q))


def tensor_concentration_rate(k: int, d: int, r: float = 4.0, samples: int = 100_000,
                              n: int = 8, seed: int = 0) -> tuple[float, float]:
    """Empirical Pr[|(sum x)^k| >= sqrt2 (r sqrt(dk/2))^k] for uniform grid labels.

    Returns ``(rate, 1/r^(2k))``; the all-ones order-k tensor contracts to (sum x)^k.
    """
    from .grid import grid_labels

    rng = np.random.default_rng(seed)
    labels = grid_labels(n)
    x = labels[rng.integers(0, labels.size, size=(samples, d))]
    value = np.abs(x.sum(axis=1)) ** k
    threshold = math.sqrt(2) * (r * math.sqrt(d * k / 2)) ** k
    return float(np.mean(value >= threshold)), r ** (-2 * k)
