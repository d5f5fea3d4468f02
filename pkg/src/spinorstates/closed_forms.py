"""Closed-form moments of the Schmidt-form bipartite qubit spinor state.

The state ``(cos chi a1†a2† + sin chi b1†b2†)^N |vac>`` has Fock amplitudes
proportional to ``cos^k chi sin^(N-k) chi`` on ``|k>_1 |k>_2``, so every
moment below is a weighted sum over ``k``.  Each quantity has a summation path
(normalized weights, computed in the log domain) and a rational-trigonometric
path.  The rational forms are 0/0 at ``cos 2chi = 0``; ``method="auto"`` uses
the summation path within ``PI4_WINDOW`` of pi/4 and at the interval ends.

Powers are handled relative to ``r = max(cos chi, sin chi)``: with
``cN = (cos chi / r)^(2N+2)`` and ``sN = (sin chi / r)^(2N+2)`` one of the two
equals 1 and ``cN - sN`` is formed with ``expm1``, which avoids both underflow
and cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .exceptions import DomainError
from .fock import log_factorial, logsumexp

PI4_WINDOW = 1e-3
ENDPOINT_TOL = 1e-12


@dataclass(frozen=True)
class BipartiteParams:
    chi: float
    N: int

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not (-ENDPOINT_TOL <= self.chi <= math.pi / 2 + ENDPOINT_TOL):
            raise ValueError(f"chi must lie in [0, pi/2], got {self.chi}")
        object.__setattr__(self, "chi", float(min(max(self.chi, 0.0), math.pi / 2)))
        object.__setattr__(self, "N", int(self.N))


def _params(p, N=None) -> BipartiteParams:
    if isinstance(p, BipartiteParams):
        return p
    return BipartiteParams(float(p), int(N))


def _use_sum(p: BipartiteParams, method: str) -> bool:
    if method == "sum":
        return True
    near_end = p.chi < ENDPOINT_TOL or p.chi > math.pi / 2 - ENDPOINT_TOL
    if method == "closed":
        if near_end or abs(math.cos(2 * p.chi)) < 1e-15:
            raise DomainError("closed form is singular at chi in {0, pi/4, pi/2}")
        return False
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    return near_end or abs(p.chi - math.pi / 4) < PI4_WINDOW


# --- summation path -------------------------------------------------------


def schmidt_log_weights(p: BipartiteParams) -> np.ndarray:
    """ln of the unnormalized weights cos^(2k) sin^(2N-2k), k = 0..N (may contain -inf)."""
    k = np.arange(p.N + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        lc, ls = np.log(math.cos(p.chi)), np.log(math.sin(p.chi))
        # 0 * (-inf) must count as 0 at the interval ends
        a = np.where(k > 0, 2 * k * lc, 0.0)
        b = np.where(k < p.N, 2 * (p.N - k) * ls, 0.0)
    return a + b


def schmidt_probabilities(p: BipartiteParams) -> np.ndarray:
    """Normalized |Psi_k|^2; also the Schmidt spectrum of the reduced state."""
    lw = schmidt_log_weights(p)
    return np.exp(lw - logsumexp(lw))


def _sum_moments(p: BipartiteParams) -> Dict[str, float]:
    N = p.N
    k = np.arange(N + 1, dtype=float)
    lw = schmidt_log_weights(p)
    lz = logsumexp(lw)
    prob = np.exp(lw - lz)
    sz = 2 * k - N
    mean = float(prob @ sz)
    # sqrt(p_k p_{k+1}) = cos^(2k+1) sin^(2N-2k-1) / Z
    cross = np.exp(0.5 * (lw[:-1] + lw[1:]) - lz)
    kk = k[:-1]
    return {
        "sz": mean,
        "szsz": float(prob @ sz**2),
        "var_sz": float(prob @ (sz - mean) ** 2),
        "sxsx": float(2 * cross @ ((kk + 1) * (N - kk))),
        "sx2": float(prob @ (k * (N - k + 1) + (k + 1) * (N - k))),
    }


# --- rational path --------------------------------------------------------


def _scaled_powers(chi: float, N: int) -> Tuple[float, float, float]:
    """(cN, sN, cN - sN) relative to max(cos, sin)^(2N+2)."""
    c, s = math.cos(chi), math.sin(chi)
    if c >= s:
        t = (2 * N + 2) * math.log(s / c)
        return 1.0, math.exp(t), -math.expm1(t)
    t = (2 * N + 2) * math.log(c / s)
    return math.exp(t), 1.0, math.expm1(t)


def _closed_sz(chi: float, N: int) -> float:
    c2, s2 = math.cos(chi) ** 2, math.sin(chi) ** 2
    cN, sN, diff = _scaled_powers(chi, N)
    num = N * (cN * c2 - sN * s2) + (N + 2) * (c2 * sN - s2 * cN)
    return num / (math.cos(2 * chi) * diff)


def _closed_szsz(chi: float, N: int) -> float:
    cN, sN, diff = _scaled_powers(chi, N)
    cos2 = math.cos(2 * chi)
    first = (4 + 2 * N + N * N + N * (N + 2) * math.cos(4 * chi)) / (2 * cos2**2)
    return first - 2 * (N + 1) * (cN + sN) / (cos2 * diff)


def _closed_sxsx(chi: float, N: int, literal: bool = False) -> float:
    c, s = math.cos(chi), math.sin(chi)
    cN, sN, diff = _scaled_powers(chi, N)
    cos2 = math.cos(2 * chi)
    # sin^3 2chi cos^(2N) and sin^3 2chi sin^(2N) after dividing by r^(2N+2)
    hi_c = 8 * s**3 * c * cN
    hi_s = 8 * s * c**3 * sN
    if literal:
        # bracket with cos^(2N) - sin^(2N+2); kept only to document that it disagrees
        hi_s = math.sin(2 * chi) ** 3 * sN
    num = N * math.sin(4 * chi) * (cN + sN) - (hi_c - hi_s)
    return num / (2 * cos2**2 * diff)


def _closed_sx2(chi: float, N: int) -> float:
    return _closed_sz(chi, N) / math.cos(2 * chi)


# --- public API -----------------------------------------------------------


def exact_sz(p, N=None, method: str = "auto") -> float:
    """<S~z_m> for either subsystem."""
    p = _params(p, N)
    return _sum_moments(p)["sz"] if _use_sum(p, method) else _closed_sz(p.chi, p.N)


def exact_szsz(p, N=None, method: str = "auto") -> float:
    """<S~z_1 S~z_2> = <(S~z_m)^2>."""
    p = _params(p, N)
    return _sum_moments(p)["szsz"] if _use_sum(p, method) else _closed_szsz(p.chi, p.N)


def exact_sxsx(p, N=None, method: str = "auto") -> float:
    """<S~x_1 S~x_2> = -<S~y_1 S~y_2>."""
    p = _params(p, N)
    return _sum_moments(p)["sxsx"] if _use_sum(p, method) else _closed_sxsx(p.chi, p.N)


def exact_sx2(p, N=None, method: str = "auto") -> float:
    """<(S~x_m)^2> = <(S~y_m)^2>."""
    p = _params(p, N)
    return _sum_moments(p)["sx2"] if _use_sum(p, method) else _closed_sx2(p.chi, p.N)


def printed_sxsx_bracket(p, N=None) -> float:
    """Rational form whose second bracket reads cos^(2N) - sin^(2N+2).

    This variant does not match the Fock-basis sum and exists only so the
    discrepancy stays visible in the test log.
    """
    p = _params(p, N)
    _use_sum(p, "closed")
    return _closed_sxsx(p.chi, p.N, literal=True)


def exact_var_sz(p, N=None) -> float:
    """Var(S~z_m) = Cov(S~z_1, S~z_2), from the centred sum (no cancellation)."""
    return _sum_moments(_params(p, N))["var_sz"]


def log_normalization(p, N=None) -> float:
    """ln of the normalization (N!)^2 sum_k cos^(2k) sin^(2N-2k)."""
    p = _params(p, N)
    return 2 * log_factorial(p.N) + logsumexp(schmidt_log_weights(p))


def exact_means(p, N=None, method: str = "auto") -> np.ndarray:
    p = _params(p, N)
    sz = exact_sz(p, method=method)
    return np.array([0.0, 0.0, sz, 0.0, 0.0, sz])


def exact_covariance_matrix(p, N=None, method: str = "auto") -> np.ndarray:
    """6x6 symmetrized covariance over (S~x1, S~y1, S~z1, S~x2, S~y2, S~z2)."""
    p = _params(p, N)
    vx = exact_sx2(p, method=method)
    cxx = exact_sxsx(p, method=method)
    vz = exact_var_sz(p)
    V = np.zeros((6, 6))
    for m in (0, 3):
        V[m, m] = V[m + 1, m + 1] = vx
        V[m + 2, m + 2] = vz
    V[0, 3] = V[3, 0] = cxx
    V[1, 4] = V[4, 1] = -cxx
    V[2, 5] = V[5, 2] = vz
    return V


def commutation_matrix(means: np.ndarray) -> np.ndarray:
    """Omega_jk = -i <[xi_j, xi_k]> from the six spin means."""
    Om = np.zeros((6, 6))
    for m in (0, 3):
        x, y, z = means[m : m + 3]
        block = 2 * np.array([[0, z, -y], [-z, 0, x], [y, -x, 0]])
        Om[m : m + 3, m : m + 3] = block
    return Om


def exact_correlations(p, N=None, method: str = "auto") -> Tuple[float, float, float]:
    """(Corr x, Corr y, Corr z) from the exact moments; z uses the limit 1 at zero variance."""
    p = _params(p, N)
    vx = exact_sx2(p, method=method)
    cxx = exact_sxsx(p, method=method)
    vz = exact_var_sz(p)
    cz = 1.0 if vz <= 1e-20 * p.N**2 else vz / math.sqrt(vz * vz)
    return cxx / vx, -cxx / vx, cz


# --- large-N approximations ----------------------------------------------


def _check_domain(p: BipartiteParams, margin: float, min_N: int) -> None:
    if abs(p.chi - math.pi / 4) <= margin:
        raise DomainError(f"|chi - pi/4| = {abs(p.chi - math.pi / 4):.3g} is within margin {margin}")
    if p.N < min_N:
        raise DomainError(f"large-N approximation needs N >= {min_N}, got {p.N}")


def approx_sz(p, N=None) -> float:
    p = _params(p, N)
    return p.N * float(np.sign(math.cos(2 * p.chi)))


def approx_szsz(p, N=None) -> float:
    p = _params(p, N)
    return p.N**2 + 2 * p.N * (1 - 1 / abs(math.cos(2 * p.chi)))


def approx_sxsx(p, N=None) -> float:
    p = _params(p, N)
    return p.N * float(np.sign(math.cos(2 * p.chi))) * math.tan(2 * p.chi)


def approx_sx2(p, N=None) -> float:
    p = _params(p, N)
    return p.N / abs(math.cos(2 * p.chi))


def approx_var_sz(p, N=None) -> float:
    p = _params(p, N)
    return math.tan(2 * p.chi) ** 2


def approx_covariance_matrix(p, N=None, margin: float = 0.1, min_N: int = 20) -> np.ndarray:
    """Large-N covariance matrix; valid away from pi/4 only."""
    p = _params(p, N)
    _check_domain(p, margin, min_N)
    cos2, sin2 = math.cos(2 * p.chi), math.sin(2 * p.chi)
    vx = p.N / abs(cos2)
    cxx = p.N * sin2 / abs(cos2)
    vz = math.tan(2 * p.chi) ** 2
    V = np.zeros((6, 6))
    for m in (0, 3):
        V[m, m] = V[m + 1, m + 1] = vx
        V[m + 2, m + 2] = vz
    V[0, 3] = V[3, 0] = cxx
    V[1, 4] = V[4, 1] = -cxx
    V[2, 5] = V[5, 2] = vz
    return V


# --- spin coherent state --------------------------------------------------


def scs_covariance_matrix(p, N=None) -> np.ndarray:
    """Covariance of the product of N copies of cos chi |00> + sin chi |11>."""
    p = _params(p, N)
    s = math.sin(2 * p.chi)
    base = np.array(
        [
            [1, 0, 0, s, 0, 0],
            [0, 1, 0, 0, -s, 0],
            [0, 0, s * s, 0, 0, s * s],
            [s, 0, 0, 1, 0, 0],
            [0, -s, 0, 0, 1, 0],
            [0, 0, s * s, 0, 0, s * s],
        ]
    )
    return p.N * base


def scs_means(p, N=None) -> np.ndarray:
    p = _params(p, N)
    z = p.N * math.cos(2 * p.chi)
    return np.array([0.0, 0.0, z, 0.0, 0.0, z])


@dataclass(frozen=True)
class LimitingValues:
    var_limit: float
    cov_limit_sign_pattern: Dict[str, int]

    def cov_limit(self, axis: str) -> float:
        return self.cov_limit_sign_pattern[axis] * self.var_limit


def limiting_values(N: int) -> LimitingValues:
    """Variances and covariances as chi -> pi/4."""
    if N < 1:
        raise ValueError("N must be positive")
    return LimitingValues(N * (N + 2) / 3, {"x": 1, "y": -1, "z": 1})
