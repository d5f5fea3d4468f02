"""Entanglement entropy, the covariance-matrix PPT test, the Hoffman-Takeuchi
witness and EPR variances for bipartite two-level states."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from . import closed_forms as cf
from .exceptions import UnsupportedConfigurationError
from .observables import CovarianceReport, covariance_report, scs_covariance_report
from .states import ScsState, SpinorState

Y2 = 4  # slot of S~y_2 in (x1, y1, z1, x2, y2, z2)


@dataclass(frozen=True)
class ReducedState:
    """Spectral form of a one-subsystem density matrix.

    ``vectors[:, k]`` is the eigenvector of ``eigenvalues[k]`` in the Fock basis.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if np.any(lam < -1e-12):
            raise ValueError("reduced state has negative eigenvalues")
        if abs(lam.sum() - 1.0) > 1e-10:
            raise ValueError(f"reduced state trace {lam.sum()} differs from 1")
        object.__setattr__(self, "eigenvalues", np.clip(lam, 0.0, None))

    @classmethod
    def diagonal(cls, weights: np.ndarray) -> "ReducedState":
        weights = np.asarray(weights, dtype=float)
        return cls(weights, np.eye(weights.size))

    @property
    def density_matrix(self) -> np.ndarray:
        v = self.vectors
        return (v * self.eigenvalues) @ v.conj().T

    def entropy(self) -> float:
        return entropy_bits(self.eigenvalues)


def entropy_bits(probabilities: np.ndarray) -> float:
    """-sum p log2 p with 0 log 0 = 0."""
    p = np.asarray(probabilities, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def binary_entropy(p: float) -> float:
    return entropy_bits(np.array([p, 1.0 - p]))


def reduced_state(state: SpinorState, keep: int = 1) -> ReducedState:
    """Reduced state of subsystem ``keep`` from the Schmidt decomposition."""
    if state.M != 2:
        raise UnsupportedConfigurationError("reduced_state needs a bipartite state")
    amps = state.amplitudes if keep == 1 else state.amplitudes.T
    u, s, _ = np.linalg.svd(amps, full_matrices=False)
    lam = s**2
    return ReducedState(lam / lam.sum(), u)


def von_neumann_entropy(state: SpinorState) -> float:
    """Entanglement entropy in bits of a pure bipartite spinor state."""
    return reduced_state(state).entropy()


def schmidt_entropy(chi: float, N: int) -> float:
    """Entropy of the Schmidt-form spinor state from its analytic spectrum."""
    return entropy_bits(cf.schmidt_probabilities(cf.BipartiteParams(chi, N)))


def scs_entropy(chi: float, N: int) -> float:
    """N copies of cos chi |00> + sin chi |11>: entropy is additive."""
    return N * binary_entropy(math.cos(chi) ** 2)


def partial_transpose(V: np.ndarray, slot: int = Y2) -> np.ndarray:
    """Flip the sign of every entry with exactly one index on ``slot``."""
    V = np.asarray(V, dtype=float)
    flip = np.ones(V.shape[0])
    flip[slot] = -1.0
    return V * np.outer(flip, flip)


def partial_transpose_commutator(Omega: np.ndarray) -> np.ndarray:
    """Omega of the partially transposed state.

    Transposition maps S^y_2 to -S^y_2 inside expectation values, so only the
    entries proportional to <S~y_2>, namely (x2, z2) and (z2, x2), change sign.
    """
    Omega = np.array(Omega, dtype=float)
    Omega[3, 5] *= -1.0
    Omega[5, 3] *= -1.0
    return Omega


def ppt_matrix(V: np.ndarray, Omega: np.ndarray) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    if V.shape != (6, 6) or np.max(np.abs(V - V.T)) > 1e-9 * max(1.0, np.max(np.abs(V))):
        raise ValueError("covariance matrix must be a symmetric 6x6 array")
    return partial_transpose(V) + 0.5j * partial_transpose_commutator(Omega)


def ppt_criterion_min_eig(report: Union[CovarianceReport, Tuple[np.ndarray, np.ndarray]]) -> float:
    """Smallest eigenvalue of PT(V) + (i/2) PT(Omega); negative means entangled."""
    V, Omega = (report.V, report.Omega) if isinstance(report, CovarianceReport) else report
    return float(np.linalg.eigvalsh(ppt_matrix(V, Omega))[0])


def exact_ppt_min_eig(chi: float, N: int) -> float:
    """PPT value of the Schmidt spinor state from the closed-form moments."""
    V = cf.exact_covariance_matrix(chi, N)
    return ppt_criterion_min_eig((V, cf.commutation_matrix(cf.exact_means(chi, N))))


def scs_ppt_min_eig(chi: float, N: int) -> float:
    V = cf.scs_covariance_matrix(chi, N)
    return ppt_criterion_min_eig((V, cf.commutation_matrix(cf.scs_means(chi, N))))


def _epr_from_matrix(V: np.ndarray) -> Tuple[float, float, float]:
    vz = V[2, 2] + V[5, 5] - 2 * V[2, 5]
    vx = V[0, 0] + V[3, 3] - 2 * V[0, 3]
    vy = V[1, 1] + V[4, 4] + 2 * V[1, 4]
    return float(vz), float(vx), float(vy)


def hoffman_takeuchi_from_matrix(V: np.ndarray, N: int) -> float:
    vz, vx, vy = _epr_from_matrix(V)
    return vx + vy + vz - 4 * N


def hoffman_takeuchi(source, N: Optional[int] = None) -> float:
    """Var(Sx1 - Sx2) + Var(Sy1 + Sy2) + Var(Sz1 - Sz2) - 4N; negative means entangled.

    ``source`` may be a SpinorState, an ScsState or a CovarianceReport (then
    ``N`` is required).
    """
    if isinstance(source, SpinorState):
        return hoffman_takeuchi_from_matrix(covariance_report(source).V, source.N)
    if isinstance(source, ScsState):
        return hoffman_takeuchi_from_matrix(scs_covariance_report(source).V, source.N)
    if isinstance(source, CovarianceReport):
        if N is None:
            raise ValueError("N is required with a CovarianceReport")
        return hoffman_takeuchi_from_matrix(source.V, N)
    raise TypeError(f"unsupported source {type(source).__name__}")


def exact_hoffman_takeuchi(chi: float, N: int) -> float:
    return hoffman_takeuchi_from_matrix(cf.exact_covariance_matrix(chi, N), N)


def scs_hoffman_takeuchi(chi: float, N: int) -> float:
    return hoffman_takeuchi_from_matrix(cf.scs_covariance_matrix(chi, N), N)


def epr_variances(state: Union[SpinorState, CovarianceReport]) -> Tuple[float, float, float]:
    """(Var(Sz1 - Sz2), Var(Sx1 - Sx2), Var(Sy1 + Sy2))."""
    report = state if isinstance(state, CovarianceReport) else covariance_report(state)
    return _epr_from_matrix(report.V)
