"""Symmetric fixed-point grid G_n and scaled/shifted hypergrids.

Index ``j`` of an ``n``-qubit register carries the label
``j/2^n - 1/2 + 2^(-n-1)``.  Multi-register states are laid out
register-major and big-endian: register 0 occupies the most significant
qubits, so a flat index is the row-major index of ``(j_0, ..., j_{d-1})``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, ResourceError

MAX_LABEL_QUBITS = 20
MAX_GRID_QUBITS = 26


def _check_n(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_LABEL_QUBITS:
        raise ConfigurationError(f"qubits per register must be in 1..{MAX_LABEL_QUBITS}, got {n!r}")


def grid_labels(n: int) -> np.ndarray:
    """Labels of G_n in index order (length 2^n, ascending)."""
    _check_n(n)
    size = 1 << n
    return (np.arange(size, dtype=float) + 0.5) / size - 0.5


def label_of(n: int, index: int) -> float:
    _check_n(n)
    if not 0 <= index < (1 << n):
        raise DomainError(f"index {index} outside 0..{(1 << n) - 1}")
    return (index + 0.5) / (1 << n) - 0.5


def label_index(n: int, value: float) -> int:
    """Index of the label nearest to ``value``; ties go to the smaller index."""
    _check_n(n)
    if not math.isfinite(value) or not -0.5 <= value <= 0.5:
        raise DomainError(f"value {value!r} outside [-1/2, 1/2]")
    size = 1 << n
    pos = (value + 0.5) * size - 0.5  # fractional index; exact for dyadic inputs
    j = math.ceil(pos - 0.5)
    return int(min(max(j, 0), size - 1))


def check_grid_size(n: int, d: int, limit: int = MAX_GRID_QUBITS) -> None:
    if d < 1:
        raise ConfigurationError(f"need at least one register, got d={d}")
    if n * d > limit:
        raise ResourceError(f"grid of {n}x{d}={n * d} qubits exceeds the {limit}-qubit guard")


@dataclass(frozen=True)
class GridSpec:
    """``d`` registers of ``n`` qubits; label vector ``x`` maps to ``y + r*x``."""

    n: int
    d: int
    r: float = 1.0
    y: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        _check_n(self.n)
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ConfigurationError(f"d must be a positive integer, got {self.d!r}")
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ConfigurationError(f"r must be positive and finite, got {self.r!r}")
        y = tuple(float(v) for v in self.y) if len(self.y) else (0.0,) * self.d
        if len(y) != self.d:
            raise ConfigurationError(f"center has length {len(y)}, expected {self.d}")
        object.__setattr__(self, "y", y)

    @property
    def size(self) -> int:
        return 1 << (self.n * self.d)

    def to_dict(self) -> dict:
        return {"n": self.n, "d": self.d, "r": self.r, "y": list(self.y)}

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        try:
            return cls(n=int(data["n"]), d=int(data["d"]), r=float(data.get("r", 1.0)),
                       y=tuple(data.get("y", ())))
        except KeyError as exc:
            raise ConfigurationError(f"grid record missing field {exc}") from None


def evaluation_points(grid: GridSpec) -> Iterator[tuple[tuple[float, ...], tuple[float, ...]]]:
    """Yield ``(label vector, y + r*x)`` for every grid point in row-major order."""
    check_grid_size(grid.n, grid.d)
    labels = grid_labels(grid.n).tolist()
    for x in itertools.product(labels, repeat=grid.d):
        yield x, tuple(yi + grid.r * xi for yi, xi in zip(grid.y, x))


def label_block(n: int, d: int, start: int, stop: int) -> np.ndarray:
    """Label vectors for flat indices ``start..stop-1`` as an array of shape (stop-start, d)."""
    idx = np.arange(start, stop, dtype=np.int64)
    size = 1 << n
    out = np.empty((idx.size, d))
    for axis in range(d - 1, -1, -1):
        out[:, axis] = ((idx % size) + 0.5) / size - 0.5
        idx //= size
    return out


def label_array(n: int, d: int, limit: int = MAX_GRID_QUBITS) -> np.ndarray:
    """All label vectors, shape (2^(n*d), d)."""
    check_grid_size(n, d, limit)
    return label_block(n, d, 0, 1 << (n * d))


def points_array(grid: GridSpec) -> np.ndarray:
    check_grid_size(grid.n, grid.d)
    return np.asarray(grid.y) + grid.r * label_array(grid.n, grid.d)


def labels_to_indices(n: int, labels: Sequence[float]) -> list[int]:
    return [label_index(n, v) for v in labels]
