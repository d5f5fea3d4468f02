"""Collective spin operators, moments and covariance matrices.

Spin operators use the Schwinger-boson form on a two-level subsystem,
``S^x = a†b + b†a``, ``S^y = -i a†b + i b†a``, ``S^z = a†a - b†b``, so their
eigenvalues run over ``-N..N`` in steps of 2 (Pauli normalization).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from .exceptions import UnsupportedConfigurationError
from .states import PAULI, LocalUnitary, ScsState, SpinorState, apply_local_unitary

AXES = ("x", "y", "z", "plus", "minus")
OPERATOR_SET = (("x", 1), ("y", 1), ("z", 1), ("x", 2), ("y", 2), ("z", 2))
OPERATOR_LABELS = tuple(f"S{a}{m}" for a, m in OPERATOR_SET)

# Variances below this (times N^2) are treated as exactly zero.
ZERO_VARIANCE = 1e-20


@lru_cache(maxsize=512)
def spin_matrix(axis: str, N: int) -> sp.csr_matrix:
    """Sparse matrix of S^axis on the (N+1)-dim space, index i <-> k = N - i a-bosons."""
    if axis not in AXES:
        raise ValueError(f"unknown spin axis {axis!r}")
    i = np.arange(N + 1)
    k = N - i
    if axis == "z":
        mat = sp.diags((2 * k - N).astype(complex), 0, format="csr")
    else:
        # S+ = a†b: |k> -> sqrt((k+1)(N-k)) |k+1>, i.e. index i -> i-1.
        raise_amp = np.sqrt((k[1:] + 1) * (N - k[1:])).astype(complex)
        plus = sp.diags(raise_amp, 1, shape=(N + 1, N + 1), format="csr")
        minus = plus.T.tocsr()
        mat = {
            "plus": plus,
            "minus": minus,
            "x": plus + minus,
            "y": -1j * plus + 1j * minus,
        }[axis].tocsr()
    mat.sort_indices()
    return mat


@dataclass(frozen=True)
class SpinOperator:
    """S^axis acting on subsystem ``subsystem`` (1-based) of a two-level spinor state."""

    axis: str
    subsystem: int = 1

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown spin axis {self.axis!r}")

    def matrix(self, N: int) -> sp.csr_matrix:
        return spin_matrix(self.axis, N)

    def apply(self, amplitudes: np.ndarray, N: int) -> np.ndarray:
        axis = self.subsystem - 1
        if not 0 <= axis < amplitudes.ndim:
            raise IndexError(f"subsystem {self.subsystem} out of range 1..{amplitudes.ndim}")
        moved = np.moveaxis(amplitudes, axis, 0)
        shape = moved.shape
        out = self.matrix(N) @ moved.reshape(shape[0], -1)
        return np.moveaxis(np.asarray(out).reshape(shape), 0, axis)


Operator = Union[SpinOperator, Sequence[SpinOperator]]


def _as_product(op: Operator) -> Tuple[SpinOperator, ...]:
    ops = (op,) if isinstance(op, SpinOperator) else tuple(op)
    if not 1 <= len(ops) <= 3:
        raise ValueError("products of one to three spin operators are supported")
    return ops


def _check_two_level(state: SpinorState) -> None:
    if state.L != 2:
        raise UnsupportedConfigurationError(f"spin operators need L = 2, state has L = {state.L}")


def apply_product(state: SpinorState, op: Operator) -> np.ndarray:
    """O_1 O_2 ... |state> with the rightmost factor applied first."""
    _check_two_level(state)
    vec = state.amplitudes
    for factor in reversed(_as_product(op)):
        vec = factor.apply(vec, state.N)
    return vec


def expectation(state: SpinorState, op: Operator) -> Union[float, complex]:
    """<state| O |state>; returns a float when the imaginary part is below 1e-10."""
    value = complex(np.vdot(state.amplitudes, apply_product(state, op)))
    scale = max(1.0, abs(value))
    return value.real if abs(value.imag) <= 1e-10 * scale else value


def to_schmidt_frame(state: SpinorState, basis_unitaries: Optional[Iterable[LocalUnitary]]) -> SpinorState:
    """Undo ``basis_unitaries`` so plain S equals the rotated operators V S V†."""
    if basis_unitaries:
        for V in basis_unitaries:
            state = apply_local_unitary(state, V.adjoint())
    return state


@dataclass(frozen=True)
class CovarianceReport:
    """Symmetrized covariance, commutation and correlation matrices over xi."""

    means: np.ndarray
    V: np.ndarray
    Omega: np.ndarray
    Corr: np.ndarray = field(default=None)
    operator_set: Tuple[str, ...] = OPERATOR_LABELS

    def __post_init__(self):
        if self.Corr is None:
            object.__setattr__(self, "Corr", correlation_matrix(self.V))

    @classmethod
    def from_moments(cls, means, V, Omega) -> "CovarianceReport":
        return cls(np.asarray(means, float), np.asarray(V, float), np.asarray(Omega, float))

    def to_json(self) -> dict:
        def clean(a):
            return [[None if not np.isfinite(x) else float(x) for x in row] for row in a]

        return {
            "operator_set": list(self.operator_set),
            "means": [float(x) for x in self.means],
            "V": clean(self.V),
            "Omega": clean(self.Omega),
            "Corr": clean(self.Corr),
        }

    def csv_rows(self) -> List[List]:
        """Long format: matrix, row label, column label, value."""
        rows = []
        for name in ("V", "Omega", "Corr"):
            mat = getattr(self, name)
            for i, a in enumerate(self.operator_set):
                for j, b in enumerate(self.operator_set):
                    rows.append([name, a, b, float(mat[i, j])])
        return rows


def correlation_matrix(V: np.ndarray) -> np.ndarray:
    """Cov/sqrt(Var Var); NaN where a variance vanishes (off-diagonal) or 1 on the diagonal."""
    V = np.asarray(V, dtype=float)
    var = np.diag(V).copy()
    scale = max(1.0, float(np.max(np.abs(var)))) if var.size else 1.0
    tiny = ZERO_VARIANCE * scale**2
    den = np.sqrt(np.outer(np.clip(var, 0.0, None), np.clip(var, 0.0, None)))
    corr = np.full_like(V, np.nan)
    ok = den > math.sqrt(tiny) * scale
    corr[ok] = V[ok] / den[ok]
    np.fill_diagonal(corr, np.where(var > tiny, 1.0, np.nan))
    return corr


def covariance_report(
    state: SpinorState, basis_unitaries: Optional[Iterable[LocalUnitary]] = None
) -> CovarianceReport:
    """Moments of xi = (S~x1, S~y1, S~z1, S~x2, S~y2, S~z2) on a bipartite two-level state."""
    if state.M != 2 or state.L != 2:
        raise UnsupportedConfigurationError(
            f"covariance report needs M = 2, L = 2 (got M = {state.M}, L = {state.L})"
        )
    frame = to_schmidt_frame(state, basis_unitaries)
    psi = frame.amplitudes.reshape(-1)
    applied = [
        SpinOperator(axis, m).apply(frame.amplitudes, frame.N).reshape(-1) for axis, m in OPERATOR_SET
    ]
    means = np.array([np.vdot(psi, v).real for v in applied])
    centred = np.array([v - mu * psi for v, mu in zip(applied, means)])
    gram = centred.conj() @ centred.T
    V = gram.real
    V = 0.5 * (V + V.T)
    Omega = 2.0 * gram.imag
    Omega = 0.5 * (Omega - Omega.T)
    return CovarianceReport.from_moments(means, V, Omega)


def correlation(
    state: SpinorState,
    axis: str,
    basis_unitaries: Optional[Iterable[LocalUnitary]] = None,
) -> float:
    """Corr(S~j_1, S~j_2).

    When both variances and the covariance vanish on the z axis the ratio is
    taken as its analytic limit 1; a vanishing denominator with a finite
    numerator yields NaN.
    """
    if axis not in ("x", "y", "z"):
        raise ValueError("axis must be x, y or z")
    report = covariance_report(state, basis_unitaries)
    j = "xyz".index(axis)
    v1, v2, cov = report.V[j, j], report.V[j + 3, j + 3], report.V[j, j + 3]
    tiny = ZERO_VARIANCE * max(1, state.N) ** 2
    if v1 * v2 > tiny**2 and v1 > tiny and v2 > tiny:
        return float(cov / math.sqrt(v1 * v2))
    if axis == "z" and abs(cov) <= tiny:
        return 1.0
    return math.nan


def local_spin_vector(state: SpinorState, subsystem: int) -> np.ndarray:
    return np.array([expectation(state, SpinOperator(a, subsystem)) for a in "xyz"], dtype=float)


# --- spin coherent states -------------------------------------------------


@dataclass(frozen=True)
class SymmetricObservable:
    """Single-molecule operator c of C = sum_n c_n."""

    c: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("observable matrix must be square")
        if np.max(np.abs(c - c.conj().T)) > 1e-12:
            raise ValueError("observable must be Hermitian")
        object.__setattr__(self, "c", c)

    def __add__(self, other: "SymmetricObservable") -> "SymmetricObservable":
        return SymmetricObservable(self.c + other.c)

    def __sub__(self, other: "SymmetricObservable") -> "SymmetricObservable":
        return SymmetricObservable(self.c - other.c)

    def __rmul__(self, scalar: float) -> "SymmetricObservable":
        return SymmetricObservable(scalar * self.c)


def pauli_observable(axis: str, subsystem: int = 1, M: int = 2) -> SymmetricObservable:
    """sigma^axis on one subsystem of an M-qubit molecule (identity elsewhere)."""
    factors = [PAULI[axis] if m == subsystem else np.eye(2) for m in range(1, M + 1)]
    mat = factors[0]
    for f in factors[1:]:
        mat = np.kron(mat, f)
    return SymmetricObservable(mat)


def identity_observable(dim: int) -> SymmetricObservable:
    return SymmetricObservable(np.eye(dim))


def _check_dim(scs: ScsState, *obs: SymmetricObservable) -> np.ndarray:
    psi = scs.vector
    for o in obs:
        if o.c.shape[0] != psi.size:
            raise ValueError(f"observable dimension {o.c.shape[0]} does not match L^M = {psi.size}")
    return psi


def _micro_mean(psi: np.ndarray, c: np.ndarray) -> complex:
    return complex(np.vdot(psi, c @ psi))


def scs_expectation(scs: ScsState, obs: SymmetricObservable) -> float:
    """<C> = N <c>."""
    psi = _check_dim(scs, obs)
    return scs.N * _micro_mean(psi, obs.c).real


def scs_covariance(scs: ScsState, C: SymmetricObservable, D: SymmetricObservable) -> float:
    """Symmetrized Cov(C, D) = N (Re<cd> - <c><d>)."""
    psi = _check_dim(scs, C, D)
    cd = _micro_mean(psi, C.c @ D.c).real
    return scs.N * (cd - _micro_mean(psi, C.c).real * _micro_mean(psi, D.c).real)


def scs_central_moment3(
    scs: ScsState, C: SymmetricObservable, D: SymmetricObservable, E: SymmetricObservable
) -> Union[float, complex]:
    """N <(c - <c>)(d - <d>)(e - <e>)> on the microscopic state."""
    psi = _check_dim(scs, C, D, E)
    eye = np.eye(psi.size)
    centred = [o.c - _micro_mean(psi, o.c).real * eye for o in (C, D, E)]
    value = scs.N * _micro_mean(psi, centred[0] @ centred[1] @ centred[2])
    return value.real if abs(value.imag) <= 1e-12 * max(1.0, abs(value)) else value


def scs_covariance_report(scs: ScsState) -> CovarianceReport:
    """Covariance report of the bipartite qubit SCS using the micro/macro relations."""
    if scs.M != 2 or scs.L != 2:
        raise UnsupportedConfigurationError("SCS covariance report needs M = 2, L = 2")
    obs = [pauli_observable(a, m) for a, m in OPERATOR_SET]
    psi = scs.vector
    means = np.array([scs_expectation(scs, o) for o in obs])
    V = np.array([[scs_covariance(scs, a, b) for b in obs] for a in obs])
    Omega = np.array(
        [[scs.N * (-1j * _micro_mean(psi, a.c @ b.c - b.c @ a.c)).real for b in obs] for a in obs]
    )
    return CovarianceReport.from_moments(means, V, Omega)


# --- Hamiltonian ----------------------------------------------------------


def build_h0(chi: float, N: int, zeeman_sign: int = -1) -> sp.csr_matrix:
    """Parent Hamiltonian of the Schmidt-form bipartite spinor state on the (N+1)^2 space.

    H0 = sin 2chi (Sy1 Sy2 - Sx1 Sx2) + zeeman_sign * cos 2chi (Sz1 + Sz2) - Sz1 Sz2.
    With ``zeeman_sign = -1`` the state (cos chi a1†a2† + sin chi b1†b2†)^N|vac>
    is an eigenvector with eigenvalue -N(N+2).
    """
    sx, sy, sz = (spin_matrix(a, N) for a in "xyz")
    eye = sp.identity(N + 1, dtype=complex, format="csr")
    kron = sp.kron
    h = (
        math.sin(2 * chi) * (kron(sy, sy) - kron(sx, sx))
        + zeeman_sign * math.cos(2 * chi) * (kron(sz, eye) + kron(eye, sz))
        - kron(sz, sz)
    )
    return h.tocsr()
