"""Dense state-vector engine.

Qubit 0 is the most significant bit of the flat index.  A state carries a
register layout (qubits per register); grid registers decode to G_n labels.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import (ConfigurationError, NumericError, ResourceError, StateCorruptionError,
                     ValidationError)
from .grid import MAX_GRID_QUBITS, label_block

TWO_PI = 2 * math.pi
MAX_TABLE_QUBITS = 22
DENSE_QFT_MAX = 12
_CHUNK = 1 << 16
_MAGIC = b"QGSV"


@dataclass
class StateVector:
    amplitudes: np.ndarray
    registers: tuple[int, ...]

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        self.registers = tuple(int(r) for r in self.registers)
        if self.amplitudes.size != 1 << self.num_qubits:
            raise ValidationError(
                f"{self.amplitudes.size} amplitudes do not match {self.num_qubits} qubits")

    @property
    def num_qubits(self) -> int:
        return sum(self.registers)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.registers)

    def register_offset(self, index: int) -> int:
        return sum(self.registers[:index])

    def qubits_of(self, index: int) -> list[int]:
        start = self.register_offset(index)
        return list(range(start, start + self.registers[index]))

    def tensor(self) -> np.ndarray:
        """View with one axis per register."""
        return self.amplitudes.reshape(tuple(1 << r for r in self.registers))


def basis_state(registers: Sequence[int], indices: Sequence[int]) -> StateVector:
    registers = tuple(registers)
    amps = np.zeros(1 << sum(registers), dtype=np.complex128)
    flat = 0
    for size, idx in zip(registers, indices):
        flat = (flat << size) | int(idx)
    amps[flat] = 1.0
    return StateVector(amps, registers)


def uniform_superposition(d: int, n: int) -> StateVector:
    if n < 1 or d < 1:
        raise ConfigurationError("need n >= 1 and d >= 1")
    if n * d > MAX_GRID_QUBITS:
        raise ResourceError(f"{n * d} qubits exceeds the {MAX_GRID_QUBITS}-qubit guard")
    size = 1 << (n * d)
    return StateVector(np.full(size, 1 / math.sqrt(size), dtype=np.complex128), (n,) * d)


def _labels_for(state: StateVector, start: int, stop: int) -> np.ndarray:
    regs = state.registers
    if len(set(regs)) == 1:
        return label_block(regs[0], len(regs), start, stop)
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, len(regs)))
    for axis in range(len(regs) - 1, -1, -1):
        size = 1 << regs[axis]
        out[:, axis] = ((idx % size) + 0.5) / size - 0.5
        idx //= size
    return out


def phase_table(state: StateVector, phase_fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Evaluate a vectorized label-vector -> radians map over every basis index."""
    out = np.empty(state.amplitudes.size)
    for start in range(0, out.size, _CHUNK):
        stop = min(start + _CHUNK, out.size)
        labels = _labels_for(state, start, stop)
        vals = np.asarray(phase_fn(labels), dtype=float).reshape(-1)
        if vals.size != stop - start:
            raise ValidationError("phase function must return one value per label vector")
        bad = ~np.isfinite(vals)
        if bad.any():
            where = int(np.argmax(bad))
            raise NumericError(f"non-finite phase at label {tuple(labels[where])}")
        out[start:stop] = vals
    return out


def apply_diagonal_phase(state: StateVector, phase_fn) -> StateVector:
    """Multiply amplitude at x by e^(i phase(x)); ``phase_fn`` may be a precomputed table."""
    if callable(phase_fn):
        phases = phase_table(state, phase_fn)
    else:
        phases = np.asarray(phase_fn, dtype=float).reshape(-1)
        if phases.size != state.amplitudes.size:
            raise ValidationError("phase table length does not match the state")
        if not np.isfinite(phases).all():
            where = int(np.argmax(~np.isfinite(phases)))
            raise NumericError(f"non-finite phase at label {tuple(_labels_for(state, where, where + 1)[0])}")
    state.amplitudes *= np.exp(1j * np.mod(phases, TWO_PI))
    return state


# --- grid Fourier transform ---

def qft_grid_matrix(n: int, inverse: bool = False) -> np.ndarray:
    """Dense matrix with entries 2^(-n/2) e^(+-2 pi i 2^n x k) over labels."""
    size = 1 << n
    # 2^n x k = (2j-N+1)(2l-N+1)/(4N): reduce the integer numerator mod 4N before scaling
    odd = (2 * np.arange(size) - size + 1).astype(np.int64)
    num = np.mod(np.outer(odd, odd), 4 * size)
    sign = -1.0 if inverse else 1.0
    return np.exp(sign * 2j * math.pi * num / (4 * size)) / math.sqrt(size)


def conjugation_phases(n: int) -> np.ndarray:
    """Diagonal of U with QFT_G = U QFT_n U."""
    size = 1 << n
    j = np.arange(size, dtype=float)
    frac = -j * (0.5 - 2.0 ** (-n - 1)) + (2.0 ** (n - 2) - 0.5 + 2.0 ** (-n - 2)) / 2
    return np.exp(2j * math.pi * np.mod(frac, 1.0))


def _axis_apply(state: StateVector, register: int, fn) -> StateVector:
    if not 0 <= register < len(state.registers):
        raise ConfigurationError(f"register {register} out of range 0..{len(state.registers) - 1}")
    t = state.tensor()
    state.amplitudes = np.ascontiguousarray(fn(t, register)).reshape(-1)
    return state


def _shape_for(t: np.ndarray, axis: int) -> tuple[int, ...]:
    shape = [1] * t.ndim
    shape[axis] = t.shape[axis]
    return tuple(shape)


def inverse_qft_grid(state: StateVector, register_index: int, method: str = "conjugated") -> StateVector:
    """Apply QFT_G^dagger to one register, densely or via U^dagger QFT_n^dagger U^dagger."""
    n = state.registers[register_index] if 0 <= register_index < len(state.registers) else 0
    if method == "dense":
        if n > DENSE_QFT_MAX:
            raise ResourceError(f"dense grid QFT limited to n <= {DENSE_QFT_MAX}")
        mat = qft_grid_matrix(n, inverse=True)
        return _axis_apply(state, register_index,
                           lambda t, ax: np.moveaxis(np.tensordot(mat, t, axes=([1], [ax])), 0, ax))
    if method != "conjugated":
        raise ConfigurationError(f"unknown QFT method {method!r}")

    def fn(t, ax):
        u = np.conj(conjugation_phases(n)).reshape(_shape_for(t, ax))
        out = np.fft.fft(t * u, axis=ax, norm="ortho")
        out *= u
        return out

    return _axis_apply(state, register_index, fn)


def qft_grid(state: StateVector, register_index: int, method: str = "conjugated") -> StateVector:
    """Forward QFT_G on one register."""
    n = state.registers[register_index] if 0 <= register_index < len(state.registers) else 0
    if method == "dense":
        if n > DENSE_QFT_MAX:
            raise ResourceError(f"dense grid QFT limited to n <= {DENSE_QFT_MAX}")
        mat = qft_grid_matrix(n)
        return _axis_apply(state, register_index,
                           lambda t, ax: np.moveaxis(np.tensordot(mat, t, axes=([1], [ax])), 0, ax))

    def fn(t, ax):
        u = conjugation_phases(n).reshape(_shape_for(t, ax))
        out = np.fft.ifft(t * u, axis=ax, norm="ortho")
        out *= u
        return out

    return _axis_apply(state, register_index, fn)


# --- generic gates ---

def is_unitary(matrix: np.ndarray, tol: float = 1e-10) -> bool:
    m = np.asarray(matrix)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(
        m.conj().T @ m, np.eye(m.shape[0]), atol=tol, rtol=0)


def apply_unitary(state: StateVector, matrix: np.ndarray, targets: Sequence[int],
                  check: bool = True) -> StateVector:
    """Apply ``matrix`` to the listed qubits (first target = most significant bit of the matrix)."""
    targets = list(targets)
    k = len(targets)
    if k == 0 or k > 12:
        raise ValidationError(f"target set size must be 1..12, got {k}")
    if len(set(targets)) != k or not all(0 <= q < state.num_qubits for q in targets):
        raise ValidationError(f"invalid target qubits {targets}")
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.shape != (1 << k, 1 << k):
        raise ValidationError(f"matrix shape {matrix.shape} does not fit {k} qubits")
    if check and not is_unitary(matrix):
        raise ValidationError("matrix is not unitary to 1e-10")
    q = state.num_qubits
    t = state.amplitudes.reshape((2,) * q)
    gate = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(gate, t, axes=(list(range(k, 2 * k)), targets))
    out = np.moveaxis(out, list(range(k)), targets)
    state.amplitudes = np.ascontiguousarray(out).reshape(-1)
    return state


# --- measurement ---

def _checked_probabilities(state: StateVector) -> np.ndarray:
    probs = np.abs(state.amplitudes) ** 2
    total = probs.sum()
    if abs(total - 1.0) > 1e-6:
        raise StateCorruptionError(f"state norm^2 {total:.9f} deviates from 1 by more than 1e-6")
    return probs / total


def _decode(state: StateVector, flat: np.ndarray) -> np.ndarray:
    flat = np.asarray(flat, dtype=np.int64)
    out = np.empty((flat.size, len(state.registers)))
    for axis in range(len(state.registers) - 1, -1, -1):
        size = 1 << state.registers[axis]
        out[:, axis] = ((flat % size) + 0.5) / size - 0.5
        flat = flat // size
    return out


def sample_indices(probs: np.ndarray, rng: np.random.Generator, shots: int) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(shots), side="right")
    return np.minimum(idx, probs.size - 1)


def measure_registers(state: StateVector, rng_seed, shots: int | None = None) -> np.ndarray:
    """Sample basis outcomes and decode per-register labels.

    Returns a length-d label vector, or shape (shots, d) when ``shots`` is given.
    """
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    probs = _checked_probabilities(state)
    idx = sample_indices(probs, rng, 1 if shots is None else shots)
    labels = _decode(state, idx)
    return labels[0] if shots is None else labels


def output_distribution(state: StateVector) -> np.ndarray:
    """Exact outcome probabilities shaped with one axis per register."""
    if state.num_qubits > MAX_TABLE_QUBITS:
        raise ResourceError(f"tabulation limited to {MAX_TABLE_QUBITS} qubits")
    return (np.abs(state.amplitudes) ** 2).reshape(tuple(1 << r for r in state.registers))


def marginal(dist: np.ndarray, axis: int) -> np.ndarray:
    others = tuple(a for a in range(dist.ndim) if a != axis)
    return dist.sum(axis=others) if others else dist


# --- debug dump ---

def dump_state(state: StateVector, path: str | Path) -> None:
    header = _MAGIC + struct.pack("<III", 1, state.num_qubits, 0)
    Path(path).write_bytes(header + state.amplitudes.astype("<c16").tobytes())


def load_state(path: str | Path, registers: Sequence[int] | None = None) -> StateVector:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValidationError("not a state dump (bad magic)")
    version, qubits, _ = struct.unpack("<III", raw[4:16])
    if version != 1:
        raise ValidationError(f"unsupported dump version {version}")
    amps = np.frombuffer(raw[16:], dtype="<c16").astype(np.complex128)
    regs = tuple(registers) if registers is not None else (qubits,)
    if sum(regs) != qubits:
        raise ValidationError("register layout does not match dumped qubit count")
    return StateVector(amps, regs)
