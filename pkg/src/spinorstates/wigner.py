"""Spin Wigner functions of uni- and bipartite spinor states.

Each subsystem of ``N`` bosons is a spin ``j = N/2`` with ``|j, m> = |k = j + m>``.
Per subsystem the kernel is

    K[m, m'](theta, phi) = (-1)^(j + m') sum_L <j, m; j, -m' | L, m - m'> Y_{L, m-m'}(theta, phi)

and ``W = sum rho_{m m'} prod_n K_n``.  ``j + m'`` equals the integer Fock
count ``k'``, so the phase is always real.  No overall normalization constant
is applied; outputs carry ``convention_tag = "literal-kernel"``.  Relative to
the more common ``(-1)^(j - m')`` phase this differs by ``(-1)^(N M)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Optional, Tuple, Union

import numpy as np

from .entanglement import ReducedState
from .exceptions import CapacityError, UnsupportedConfigurationError
from .fock import log_factorial
from .states import SpinorState, coherent_spinor

CONVENTION_TAG = "literal-kernel"
WIGNER_CAP = 20


# --- Clebsch-Gordan -------------------------------------------------------


def _doubled(x: float) -> int:
    d = round(2 * x)
    if abs(2 * x - d) > 1e-9:
        raise ValueError(f"{x} is not an integer or half-integer")
    return int(d)


def _racah_args(tj1, tm1, tj2, tm2, tJ, tM):
    """Integer factorial arguments of the Racah formula, or None if the coefficient vanishes."""
    if tM != tm1 + tm2:
        return None
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tM) > tJ:
        return None
    if (tj1 + tm1) % 2 or (tj2 + tm2) % 2 or (tJ + tM) % 2:
        return None
    if tJ < abs(tj1 - tj2) or tJ > tj1 + tj2 or (tj1 + tj2 + tJ) % 2:
        return None
    h = lambda v: v // 2  # noqa: E731  all arguments are even here
    tri = (h(tJ + tj1 - tj2), h(tJ - tj1 + tj2), h(tj1 + tj2 - tJ), h(tj1 + tj2 + tJ) + 1)
    proj = (h(tJ + tM), h(tJ - tM), h(tj1 - tm1), h(tj1 + tm1), h(tj2 - tm2), h(tj2 + tm2))
    a, b, c = h(tj1 + tj2 - tJ), h(tj1 - tm1), h(tj2 + tm2)
    d, e = h(tJ - tj2 + tm1), h(tJ - tj1 - tm2)
    ks = range(max(0, -d, -e), min(a, b, c) + 1)
    return tJ, tri, proj, [(k, (k, a - k, b - k, c - k, d + k, e + k)) for k in ks]


def _cg_log(tj1, tm1, tj2, tm2, tJ, tM) -> float:
    args = _racah_args(tj1, tm1, tj2, tm2, tJ, tM)
    if args is None:
        return 0.0
    tJ, tri, proj, terms = args
    lf = log_factorial
    log_pre = 0.5 * (
        math.log(tJ + 1)
        + lf(tri[0]) + lf(tri[1]) + lf(tri[2]) - lf(tri[3])
        + sum(lf(p) for p in proj)
    )
    logs = np.array([-sum(lf(x) for x in den) for _, den in terms])
    signs = np.array([-1.0 if k % 2 else 1.0 for k, _ in terms])
    peak = logs.max()
    total = math.fsum(signs * np.exp(logs - peak))
    return total * math.exp(log_pre + peak)


def _cg_exact(tj1, tm1, tj2, tm2, tJ, tM) -> float:
    args = _racah_args(tj1, tm1, tj2, tm2, tJ, tM)
    if args is None:
        return 0.0
    tJ, tri, proj, terms = args
    fac = math.factorial
    pre = Fraction((tJ + 1) * fac(tri[0]) * fac(tri[1]) * fac(tri[2]), fac(tri[3]))
    for p in proj:
        pre *= fac(p)
    total = Fraction(0)
    for k, den in terms:
        prod = 1
        for x in den:
            prod *= fac(x)
        total += Fraction(-1 if k % 2 else 1, prod)
    if total == 0:
        return 0.0
    return math.copysign(math.sqrt(pre * total * total), total)


def clebsch_gordan(j1, m1, j2, m2, J, M, exact: bool = False) -> float:
    """<j1, m1; j2, m2 | J, M> with the Condon-Shortley convention.

    Quantum numbers may be half-integers.  Selection-rule violations give 0.
    ``exact=True`` evaluates the Racah sum in rational arithmetic.
    """
    doubled = tuple(_doubled(x) for x in (j1, m1, j2, m2, J, M))
    return (_cg_exact if exact else _cg_log)(*doubled)


@lru_cache(maxsize=64)
def _cg_table(N: int, exact: bool) -> np.ndarray:
    """T[L, i, i'] = <j, m; j, -m' | L, m - m'> with m = j - i, m' = j - i'."""
    table = np.zeros((N + 1, N + 1, N + 1))
    fn = _cg_exact if exact else _cg_log
    for i in range(N + 1):
        tm = N - 2 * i
        for ip in range(N + 1):
            tmp = -(N - 2 * ip)
            tM = tm + tmp
            for L in range(abs(tM) // 2, N + 1):
                table[L, i, ip] = fn(N, tm, N, tmp, 2 * L, tM)
    table.setflags(write=False)
    return table


# --- spherical harmonics --------------------------------------------------


def _legendre_columns(Lmax: int, x: np.ndarray) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield (M, P) for M = 0..Lmax where ``P[L] * exp(i M phi)`` is Y_{L M}.

    Upward recurrence in L for fully normalized associated Legendre functions;
    rows with L < M are zero.
    """
    x = np.asarray(x, dtype=float)
    sin = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    pmm = np.full_like(x, 1.0 / math.sqrt(4 * math.pi))
    for M in range(Lmax + 1):
        if M > 0:
            pmm = -math.sqrt((2 * M + 1) / (2 * M)) * sin * pmm
        col = np.zeros((Lmax + 1,) + x.shape)
        col[M] = pmm
        if M < Lmax:
            col[M + 1] = math.sqrt(2 * M + 3) * x * pmm
        for L in range(M + 2, Lmax + 1):
            a = math.sqrt((4 * L * L - 1) / (L * L - M * M))
            b = math.sqrt(((L - 1) ** 2 - M * M) / (4 * (L - 1) ** 2 - 1))
            col[L] = a * (x * col[L - 1] - b * col[L - 2])
        yield M, col


def spherical_harmonic(L: int, M: int, theta, phi):
    """Orthonormal Y_{L M}(theta, phi) with the Condon-Shortley phase."""
    if L < 0:
        raise ValueError("L must be non-negative")
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    if abs(M) > L:
        out = np.zeros(theta.shape, dtype=complex)
    else:
        for mm, col in _legendre_columns(L, np.cos(theta)):
            if mm == abs(M):
                out = col[L] * np.exp(1j * abs(M) * phi)
                break
        if M < 0:
            out = (-1) ** M * np.conj(out)
    return out[()] if out.ndim == 0 else out


def spherical_harmonic_table(Lmax: int, theta, phi) -> np.ndarray:
    """Y[L, M + Lmax, p] for all L <= Lmax, |M| <= L at paired points."""
    theta = np.asarray(theta, float).ravel()
    phi = np.asarray(phi, float).ravel()
    out = np.zeros((Lmax + 1, 2 * Lmax + 1, theta.size), dtype=complex)
    for M, col in _legendre_columns(Lmax, np.cos(theta)):
        pos = col * np.exp(1j * M * phi)
        out[:, Lmax + M] = pos
        if M:
            out[:, Lmax - M] = (-1) ** M * np.conj(pos)
    return out


# --- grids and kernels ----------------------------------------------------


@dataclass(frozen=True)
class AngularGrid:
    """Gauss-Legendre nodes in cos(theta) times a uniform phi grid on [0, 2pi)."""

    n_theta: int = 64
    n_phi: int = 64

    def __post_init__(self):
        if self.n_theta < 1 or self.n_phi < 1:
            raise ValueError("grid sizes must be positive")

    @property
    def cos_nodes(self) -> np.ndarray:
        return np.polynomial.legendre.leggauss(self.n_theta)[0][::-1]

    @property
    def cos_weights(self) -> np.ndarray:
        return np.polynomial.legendre.leggauss(self.n_theta)[1][::-1]

    @property
    def theta(self) -> np.ndarray:
        """Ascending polar angles."""
        return np.arccos(self.cos_nodes)

    @property
    def phi(self) -> np.ndarray:
        return 2 * math.pi * np.arange(self.n_phi) / self.n_phi

    def points(self) -> Tuple[np.ndarray, np.ndarray]:
        """Flattened (theta, phi) pairs in row-major (theta, phi) order."""
        t, p = np.meshgrid(self.theta, self.phi, indexing="ij")
        return t.ravel(), p.ravel()

    def integrate(self, values: np.ndarray) -> float:
        """Integral over the unit sphere of values[n_theta, n_phi]."""
        return float(self.cos_weights @ np.asarray(values) @ np.full(self.n_phi, 2 * math.pi / self.n_phi))


def _check_cap(N: int, extended_precision: bool) -> None:
    if N > WIGNER_CAP and not extended_precision:
        raise CapacityError(
            f"Wigner functions are capped at N = {WIGNER_CAP} (got N = {N}); "
            "reduce N or enable extended precision"
        )


def kernel(N: int, theta, phi, extended_precision: bool = False) -> np.ndarray:
    """K[i, i', p] of one subsystem at paired points, Fock index i <-> m = N/2 - i."""
    _check_cap(N, extended_precision)
    theta = np.asarray(theta, float).ravel()
    phi = np.asarray(phi, float).ravel()
    cg = _cg_table(N, extended_precision)
    Y = spherical_harmonic_table(N, theta, phi)
    K = np.zeros((N + 1, N + 1, theta.size), dtype=complex)
    idx = np.arange(N + 1)
    for M in range(-N, N + 1):
        # m - m' = i' - i
        i = idx[(idx + M >= 0) & (idx + M <= N)]
        ip = i + M
        K[i, ip] = cg[:, i, ip].T @ Y[:, N + M]
    phase = np.where((N - idx) % 2, -1.0, 1.0)  # (-1)^(j + m') = (-1)^(k')
    return K * phase[None, :, None]


def _theta_kernel(N: int, theta, extended_precision: bool = False) -> np.ndarray:
    """2pi * K[i, i](theta, .) integrated over phi (only M = 0 survives)."""
    _check_cap(N, extended_precision)
    theta = np.asarray(theta, float).ravel()
    cg = _cg_table(N, extended_precision)
    _, col = next(_legendre_columns(N, np.cos(theta)))
    idx = np.arange(N + 1)
    diag = cg[:, idx, idx]  # (L, i)
    phase = np.where((N - idx) % 2, -1.0, 1.0)
    return 2 * math.pi * phase[:, None] * (diag.T @ col)


@dataclass(frozen=True)
class WignerSlice:
    """W on an angular grid; ``values[a, b]`` is at (theta[a], phi[b])."""

    theta: np.ndarray
    phi: np.ndarray
    values: np.ndarray
    fixed: Optional[Tuple[float, float]] = None
    imag_residue: float = 0.0
    convention_tag: str = CONVENTION_TAG

    def argmax(self) -> Tuple[float, float]:
        a, b = np.unravel_index(np.argmax(self.values), self.values.shape)
        return float(self.theta[a]), float(self.phi[b])

    def argmin(self) -> Tuple[float, float]:
        a, b = np.unravel_index(np.argmin(self.values), self.values.shape)
        return float(self.theta[a]), float(self.phi[b])


def _real(W: np.ndarray) -> Tuple[np.ndarray, float]:
    residue = float(np.max(np.abs(W.imag))) if W.size else 0.0
    scale = max(1.0, float(np.max(np.abs(W.real)))) if W.size else 1.0
    if residue > 1e-6 * scale:
        raise ArithmeticError(f"Wigner function has imaginary residue {residue:.3g}")
    return W.real, residue


StateLike = Union[SpinorState, ReducedState, np.ndarray]


def _density(state: StateLike, N: Optional[int] = None) -> Tuple[np.ndarray, int]:
    """Unipartite density matrix and N."""
    if isinstance(state, SpinorState):
        if state.M != 1 or state.L != 2:
            raise UnsupportedConfigurationError("expected a unipartite two-level state")
        v = state.amplitudes
        return np.outer(v, v.conj()), state.N
    rho = state.density_matrix if isinstance(state, ReducedState) else np.asarray(state, complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    return rho, rho.shape[0] - 1


def wigner_points(state: StateLike, theta, phi, extended_precision: bool = False) -> np.ndarray:
    """Unipartite W at paired points (complex, before the reality check)."""
    rho, N = _density(state)
    K = kernel(N, theta, phi, extended_precision)
    return np.einsum("ab,abp->p", rho, K)


def wigner_unipartite(
    state: StateLike, grid: AngularGrid = AngularGrid(), extended_precision: bool = False
) -> WignerSlice:
    t, p = grid.points()
    W = wigner_points(state, t, p, extended_precision).reshape(grid.n_theta, grid.n_phi)
    values, residue = _real(W)
    return WignerSlice(grid.theta, grid.phi, values, None, residue)


def _bipartite_amplitudes(state: SpinorState) -> np.ndarray:
    if state.M != 2 or state.L != 2:
        raise UnsupportedConfigurationError("bipartite Wigner slices need M = 2, L = 2")
    return state.amplitudes


def bipartite_points(
    state: SpinorState, theta1, phi1, theta2: float, phi2: float, extended_precision: bool = False
) -> np.ndarray:
    """Complex W(theta1, phi1, theta2, phi2) at paired points on subsystem 1, fixed subsystem 2."""
    psi = _bipartite_amplitudes(state)
    N = state.N
    K2 = kernel(N, [theta2], [phi2], extended_precision)[:, :, 0]
    R = psi @ K2 @ psi.conj().T  # R[i1, i1'] = sum psi[i1,i2] K2[i2,i2'] psi*[i1',i2']
    K1 = kernel(N, theta1, phi1, extended_precision)
    return np.einsum("ab,abp->p", R, K1)


def wigner_bipartite(
    state: SpinorState,
    fixed: Tuple[float, float],
    grid: AngularGrid = AngularGrid(),
    extended_precision: bool = False,
) -> WignerSlice:
    """Slice of the bipartite Wigner function with (theta2, phi2) held fixed."""
    t, p = grid.points()
    W = bipartite_points(state, t, p, fixed[0], fixed[1], extended_precision)
    values, residue = _real(W.reshape(grid.n_theta, grid.n_phi))
    return WignerSlice(grid.theta, grid.phi, values, (float(fixed[0]), float(fixed[1])), residue)


@dataclass(frozen=True)
class ThetaMarginal:
    """W(theta1, theta2) integrated over both azimuths; values[a, b] at (theta[a], theta[b])."""

    theta: np.ndarray
    values: np.ndarray
    convention_tag: str = CONVENTION_TAG


def wigner_marginal_theta(
    state: SpinorState, grid: AngularGrid = AngularGrid(), extended_precision: bool = False
) -> ThetaMarginal:
    """Analytic phi1, phi2 marginal: only diagonal density elements contribute."""
    psi = _bipartite_amplitudes(state)
    k0 = _theta_kernel(state.N, grid.theta, extended_precision)
    values = k0.T @ (np.abs(psi) ** 2) @ k0
    return ThetaMarginal(grid.theta, values)


def wigner_marginal_unipartite(
    state: StateLike, theta, extended_precision: bool = False
) -> np.ndarray:
    """Unipartite W integrated over phi."""
    rho, N = _density(state)
    k0 = _theta_kernel(N, theta, extended_precision)
    return np.real(np.diag(rho)) @ k0


def project_second_ensemble(state: SpinorState, theta2: float, phi2: float) -> SpinorState:
    """<<theta2, phi2|_2 |state>>, normalized, as a unipartite state."""
    psi = _bipartite_amplitudes(state)
    coh = coherent_spinor(theta2, phi2, state.N).amplitudes
    out = psi @ coh.conj()
    norm = float(np.linalg.norm(out))
    if norm < 1e-300:
        raise ArithmeticError("projection onto the coherent state has zero norm")
    return SpinorState(state.N, 1, 2, out / norm, math.nan)


def traced_rho1(chi: float, N: int) -> ReducedState:
    """Reduced state of subsystem 1 for the Schmidt-form state: diagonal in Fock space."""
    from .closed_forms import BipartiteParams, schmidt_probabilities

    weights = schmidt_probabilities(BipartiteParams(chi, N))
    # Fock index i holds k = N - i a-bosons, weight cos^(2k) sin^(2N-2k)
    return ReducedState.diagonal(weights[::-1].copy())


def inverse_rotated_angles(O: np.ndarray, theta, phi) -> Tuple[np.ndarray, np.ndarray]:
    """Angles of O^T n(theta, phi) for a Bloch rotation matrix O."""
    theta = np.asarray(theta, float)
    phi = np.asarray(phi, float)
    n = np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    r = np.tensordot(np.asarray(O).T, n, axes=1)
    t = np.arccos(np.clip(r[2], -1.0, 1.0))
    p = np.mod(np.arctan2(r[1], r[0]), 2 * math.pi)
    return t, p


def orientation_sign(N: int, M: int = 1) -> int:
    """(-1)^(N M): multiply a literal-kernel W by this to get the (-1)^(j - m') convention."""
    return -1 if (N * M) % 2 else 1
