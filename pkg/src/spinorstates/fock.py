"""Multi-level bosonic Fock bases and log-domain combinatorics.

A subsystem holding ``N`` bosons distributed over ``L`` levels is spanned by
occupation vectors ``(k_0, ..., k_{L-1})`` with ``sum(k) == N``.  States are
enumerated lexicographically with the level-0 count descending, so for
``L = 2`` the dense index ``i`` corresponds to ``k_0 = N - i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterator, Optional, Tuple

import numpy as np
import scipy.special

OccupationVector = Tuple[int, ...]

_LOG_FACTORIAL_TABLE_SIZE = 10_001
_LOG_FACTORIAL_TABLE = np.concatenate(
    ([0.0], np.cumsum(np.log(np.arange(1, _LOG_FACTORIAL_TABLE_SIZE, dtype=float))))
)


def dimension(N: int, L: int) -> int:
    """Number of occupation vectors of ``N`` bosons on ``L`` levels.

    Exact for any size (Python integers never overflow).
    """
    if N < 0 or L < 1:
        raise ValueError(f"dimension needs N >= 0 and L >= 1, got N={N}, L={L}")
    return math.comb(N + L - 1, L - 1)


def log_factorial(n: int) -> float:
    """ln(n!), tabulated up to 10^4 and lgamma beyond."""
    if n < 0:
        raise ValueError(f"log_factorial of negative integer {n}")
    if n < _LOG_FACTORIAL_TABLE_SIZE:
        return float(_LOG_FACTORIAL_TABLE[n])
    return math.lgamma(n + 1.0)


def log_factorial_array(n: np.ndarray) -> np.ndarray:
    """Vectorised ``log_factorial`` for integer arrays with entries <= 10^4."""
    n = np.asarray(n)
    if np.any(n < 0):
        raise ValueError("log_factorial of negative integer")
    if np.any(n >= _LOG_FACTORIAL_TABLE_SIZE):
        return np.vectorize(log_factorial, otypes=[float])(n)
    return _LOG_FACTORIAL_TABLE[n]


def log_multinomial(counts) -> float:
    """ln of the multinomial coefficient N! / (k_0! ... k_{L-1}!)."""
    counts = [int(k) for k in counts]
    return log_factorial(sum(counts)) - sum(log_factorial(k) for k in counts)


def multinomial(counts) -> int:
    """Exact multinomial coefficient."""
    counts = [int(k) for k in counts]
    if any(k < 0 for k in counts):
        raise ValueError("negative occupation")
    result, total = 1, 0
    for k in counts:
        total += k
        result *= math.comb(total, k)
    return result


def logsumexp(values: np.ndarray) -> float:
    """Stable ln(sum(exp(values))); ``-inf`` entries are allowed."""
    values = np.asarray(values, dtype=float)
    if values.size == 0 or not np.any(np.isfinite(values)):
        return float(np.max(values, initial=-math.inf))
    return float(scipy.special.logsumexp(values))


def apply_creation(state: OccupationVector, level: int) -> Tuple[OccupationVector, float]:
    """a†_level acting on a Fock vector: returns (new occupation, sqrt(k_level + 1))."""
    if not 0 <= level < len(state):
        raise IndexError(f"level {level} out of range for L={len(state)}")
    k = state[level]
    new = state[:level] + (k + 1,) + state[level + 1 :]
    return new, math.sqrt(k + 1)


def apply_annihilation(
    state: OccupationVector, level: int
) -> Optional[Tuple[OccupationVector, float]]:
    """a_level acting on a Fock vector, or ``None`` when the level is empty."""
    if not 0 <= level < len(state):
        raise IndexError(f"level {level} out of range for L={len(state)}")
    k = state[level]
    if k == 0:
        return None
    new = state[:level] + (k - 1,) + state[level + 1 :]
    return new, math.sqrt(k)


@dataclass(frozen=True)
class LogAmplitude:
    """A complex number stored as ln|z| plus a unit phase."""

    log_magnitude: float
    phase: complex = 1.0 + 0.0j

    @classmethod
    def from_complex(cls, z: complex) -> "LogAmplitude":
        if z == 0:
            return cls(-math.inf, 1.0 + 0.0j)
        return cls(math.log(abs(z)), complex(z) / abs(z))

    def __mul__(self, other: "LogAmplitude") -> "LogAmplitude":
        return LogAmplitude(self.log_magnitude + other.log_magnitude, self.phase * other.phase)

    def to_complex(self, shift: float = 0.0) -> complex:
        """Linear value scaled by ``exp(-shift)``."""
        if self.log_magnitude == -math.inf:
            return 0j
        return self.phase * math.exp(self.log_magnitude - shift)


def max_shift_to_linear(amplitudes) -> Tuple[np.ndarray, float]:
    """Convert LogAmplitudes to linear scale after subtracting their max log-magnitude.

    Returns ``(values, shift)`` with ``values[i] * exp(shift)`` the true amplitudes.
    """
    amplitudes = list(amplitudes)
    finite = [a.log_magnitude for a in amplitudes if a.log_magnitude > -math.inf]
    shift = max(finite) if finite else 0.0
    return np.array([a.to_complex(shift) for a in amplitudes], dtype=complex), shift


def _enumerate(N: int, L: int) -> Iterator[OccupationVector]:
    if L == 1:
        yield (N,)
        return
    for k0 in range(N, -1, -1):
        for rest in _enumerate(N - k0, L - 1):
            yield (k0,) + rest


@dataclass(frozen=True)
class FockSpace:
    """Ordered basis of occupation vectors for fixed (N, L)."""

    N: int
    L: int
    states: Tuple[OccupationVector, ...] = field(repr=False)
    index: Dict[OccupationVector, int] = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def occupations(self) -> np.ndarray:
        """Integer array of shape (D, L)."""
        return np.array(self.states, dtype=np.int64).reshape(len(self.states), self.L)

    def raise_map(self, level: int) -> Tuple[np.ndarray, np.ndarray]:
        """Target indices in the (N+1)-space and ladder factors for a†_level."""
        return _raise_map(self.N, self.L, level)


@lru_cache(maxsize=256)
def fock_space(N: int, L: int) -> FockSpace:
    """Cached, shared read-only Fock space."""
    if N < 0 or L < 1:
        raise ValueError(f"fock_space needs N >= 0 and L >= 1, got N={N}, L={L}")
    states = tuple(_enumerate(N, L))
    return FockSpace(N, L, states, {s: i for i, s in enumerate(states)})


@lru_cache(maxsize=1024)
def _raise_map(N: int, L: int, level: int) -> Tuple[np.ndarray, np.ndarray]:
    src = fock_space(N, L)
    dst = fock_space(N + 1, L)
    targets = np.empty(len(src), dtype=np.int64)
    factors = np.empty(len(src), dtype=float)
    for i, occ in enumerate(src.states):
        new, factor = apply_creation(occ, level)
        targets[i] = dst.index[new]
        factors[i] = factor
    targets.setflags(write=False)
    factors.setflags(write=False)
    return targets, factors


def quadratic_operator(N: int, L: int, h: np.ndarray) -> np.ndarray:
    """Dense matrix of sum_{l,l'} h[l, l'] a†_l a_l' on the fixed-N space."""
    space = fock_space(N, L)
    h = np.asarray(h)
    out = np.zeros((len(space), len(space)), dtype=complex)
    for col, occ in enumerate(space.states):
        for lp in range(L):
            lowered = apply_annihilation(occ, lp)
            if lowered is None:
                continue
            mid, f1 = lowered
            for l in range(L):
                if h[l, lp] == 0:
                    continue
                new, f2 = apply_creation(mid, l)
                out[space.index[new], col] += h[l, lp] * f1 * f2
    return out
