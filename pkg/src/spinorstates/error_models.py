"""Single-particle error channels, signal-to-noise laws and majority-vote readout.

Kraus families act on a two-mode (a, b) Fock space truncated to at most
``n_max`` bosons per mode.  Both channels only lower or preserve occupations,
so on the subspace ``n_a + n_b <= n_max`` every conjugated spin operator is
computed exactly; the dephasing sum over ``l`` is cut where the remaining
Poisson weight drops below ``TAIL_TOL``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import stats

from . import closed_forms as cf
from .fock import logsumexp
from .observables import SymmetricObservable

TAIL_TOL = 1e-12
MC_STREAMS = 8
DEFAULT_SEED = 0xC0FFEE


def _ladder(n_max: int) -> np.ndarray:
    """Single-mode annihilation operator on n = 0..n_max."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1)


def _two_mode_spin(axis: str, n_max: int) -> np.ndarray:
    a1 = _ladder(n_max)
    eye = np.eye(n_max + 1)
    a, b = np.kron(a1, eye), np.kron(eye, a1)
    if axis == "x":
        return a.T @ b + b.T @ a
    if axis == "y":
        return -1j * a.T @ b + 1j * b.T @ a
    if axis == "z":
        return a.T @ a - b.T @ b
    if axis == "N":
        return a.T @ a + b.T @ b
    raise ValueError(f"unknown operator {axis!r}; expected x, y, z or N")


def _subspace(n_max: int) -> np.ndarray:
    """Indices of |n_a, n_b> with n_a + n_b <= n_max in the kron basis."""
    na, nb = np.divmod(np.arange((n_max + 1) ** 2), n_max + 1)
    return np.flatnonzero(na + nb <= n_max)


def _proportionality(A: np.ndarray, B: np.ndarray) -> Tuple[float, float]:
    """Least-squares c with A ~ c B and the relative residual."""
    c = np.vdot(B, A) / np.vdot(B, B)
    resid = np.linalg.norm(A - c * B) / max(np.linalg.norm(A), 1e-300)
    if abs(c.imag) > 1e-12:
        raise ArithmeticError("conjugated operator is not a real multiple")
    return float(c.real), float(resid)


@dataclass(frozen=True)
class LossChannel:
    """Independent boson loss on both modes; ``gamma`` is the survival probability."""

    gamma: float

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")

    def kraus(self, n_max: int) -> List[np.ndarray]:
        """Single-mode E_l = sqrt((1-gamma)^l / l!) gamma^(n/2) a^l, l = 0..n_max."""
        a = _ladder(n_max)
        n = np.arange(n_max + 1)
        decay = np.diag(self.gamma ** (n / 2.0))
        ops, al = [], np.eye(n_max + 1)
        for l in range(n_max + 1):
            coeff = math.sqrt((1 - self.gamma) ** l / math.factorial(l))
            ops.append(coeff * decay @ al)
            al = al @ a
        return ops

    def two_mode_kraus(self, n_max: int) -> List[np.ndarray]:
        single = self.kraus(n_max)
        return [np.kron(Ea, Eb) for Ea in single for Eb in single]

    def conjugate(self, op: np.ndarray, n_max: int) -> np.ndarray:
        """sum E† op E on the two-mode kron space."""
        return sum(E.T @ op @ E for E in self.two_mode_kraus(n_max))

    def apply(self, rho: np.ndarray, n_max: int) -> np.ndarray:
        """sum E rho E† for a two-mode density matrix in the kron basis."""
        return sum(E @ rho @ E.T for E in self.two_mode_kraus(n_max))

    def completeness_error(self, n_max: int) -> float:
        total = self.conjugate(np.eye((n_max + 1) ** 2), n_max)
        keep = _subspace(n_max)
        return float(np.max(np.abs(total[np.ix_(keep, keep)] - np.eye(keep.size))))


@dataclass(frozen=True)
class DephasingChannel:
    """Dephasing generated by n = a†a: E_l = sqrt(kappa^l / l!) exp(-kappa n^2 / 2) n^l."""

    kappa: float
    basis: str = "z"

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if self.basis != "z":
            raise ValueError("only z-basis dephasing is built in; rotate observables for other bases")

    def cutoff(self, n_max: int) -> int:
        """Smallest l_max whose Poisson(kappa n_max^2) upper tail is below TAIL_TOL."""
        mu = self.kappa * n_max**2
        if mu == 0:
            return 0
        return int(stats.poisson.isf(TAIL_TOL, mu)) + 1

    def kraus(self, n_max: int) -> List[np.ndarray]:
        if self.kappa == 0:
            return [np.eye(n_max + 1)]
        n = np.arange(n_max + 1, dtype=float)
        ops = []
        with np.errstate(divide="ignore"):
            log_n = np.log(n)
        for l in range(self.cutoff(n_max) + 1):
            log_c = 0.5 * (l * math.log(self.kappa) - math.lgamma(l + 1)) - 0.5 * self.kappa * n**2
            with np.errstate(invalid="ignore"):
                power = np.where(n > 0, l * log_n, 0.0 if l == 0 else -np.inf)
            ops.append(np.diag(np.exp(log_c + power)))
        return ops

    def tail_weight(self, n_max: int) -> float:
        mu = self.kappa * n_max**2
        return float(stats.poisson.sf(self.cutoff(n_max), mu)) if mu else 0.0

    def two_mode_kraus(self, n_max: int) -> List[np.ndarray]:
        eye = np.eye(n_max + 1)
        return [np.kron(E, eye) for E in self.kraus(n_max)]

    def conjugate(self, op: np.ndarray, n_max: int) -> np.ndarray:
        return sum(E.T @ op @ E for E in self.two_mode_kraus(n_max))

    def apply(self, rho: np.ndarray, n_max: int) -> np.ndarray:
        return sum(E @ rho @ E.T for E in self.two_mode_kraus(n_max))

    def completeness_error(self, n_max: int) -> float:
        total = sum(E.T @ E for E in self.kraus(n_max))
        return float(np.max(np.abs(total - np.eye(n_max + 1))))


def conjugation_scalar(channel, axis: str, n_max: int) -> Tuple[float, float]:
    """(c, residual) with sum E† O E = c O on the subspace n_a + n_b <= n_max."""
    op = _two_mode_spin(axis, n_max)
    keep = np.ix_(_subspace(n_max), _subspace(n_max))
    return _proportionality(channel.conjugate(op, n_max)[keep], op[keep])


def loss_conjugate_spin(channel: LossChannel, axis: str, n_max: Optional[int] = None) -> float:
    """Scalar multiplying S^axis (or N for axis="N") under loss; explicit Kraus sum if n_max is given."""
    if n_max is None:
        _two_mode_spin(axis, 1)  # validates the axis
        return channel.gamma
    c, resid = conjugation_scalar(channel, axis, n_max)
    if resid > 1e-9:
        raise ArithmeticError(f"loss-conjugated S^{axis} is not proportional (residual {resid:.2g})")
    return c


def dephasing_conjugate_spin(channel: DephasingChannel, axis: str, n_max: Optional[int] = None) -> float:
    """exp(-kappa/2) for x and y, 1 for z; explicit Kraus sum if n_max is given."""
    if n_max is None:
        if axis not in ("x", "y", "z"):
            raise ValueError(f"unknown spin axis {axis!r}")
        return 1.0 if axis == "z" else math.exp(-channel.kappa / 2)
    c, resid = conjugation_scalar(channel, axis, n_max)
    if resid > 1e-9:
        raise ArithmeticError(f"dephased S^{axis} is not proportional (residual {resid:.2g})")
    return c


# --- product states -------------------------------------------------------


def _check_density(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("density matrix must be Hermitian")
    if abs(np.trace(rho).real - 1) > 1e-10:
        raise ValueError("density matrix must have unit trace")
    if np.linalg.eigvalsh(rho)[0] < -1e-10:
        raise ValueError("density matrix must be positive semidefinite")
    return rho


def scs_error_observable(rho_micro: np.ndarray, obs: SymmetricObservable, N: int) -> Tuple[float, float]:
    """(mean, variance) of C = sum_n c_n on rho^(tensor N)."""
    rho = _check_density(rho_micro)
    c = obs.c
    if c.shape != rho.shape:
        raise ValueError("observable and density matrix dimensions differ")
    m1 = np.trace(rho @ c).real
    m2 = np.trace(rho @ c @ c).real
    return N * m1, N * (m2 - m1 * m1)


def snr_ratio(
    kind: str,
    N: int,
    *,
    rho_micro: Optional[np.ndarray] = None,
    obs: Optional[SymmetricObservable] = None,
    chi: Optional[float] = None,
    exact: bool = False,
) -> float:
    """Normalized noise sqrt(Var)/mean; NaN when the mean vanishes.

    ``kind="scs"`` uses a microscopic state and observable; ``kind="spinor_sz"``
    is S~z of the Schmidt spinor state, large-N form tan(2 chi)/N unless
    ``exact`` is set.
    """
    if kind == "scs":
        if rho_micro is None or obs is None:
            raise ValueError("scs ratio needs rho_micro and obs")
        rho = np.asarray(rho_micro, dtype=complex)
        if rho.ndim == 1:
            rho = np.outer(rho, rho.conj())
        mean, var = scs_error_observable(rho, obs, N)
        if abs(mean) < 1e-14 * N:
            return math.nan
        return math.sqrt(max(var, 0.0)) / mean
    if kind == "spinor_sz":
        if chi is None:
            raise ValueError("spinor_sz ratio needs chi")
        if not exact:
            return math.tan(2 * chi) / N
        mean = cf.exact_sz(chi, N)
        if abs(mean) < 1e-14 * N:
            return math.nan
        return math.sqrt(cf.exact_var_sz(chi, N)) / mean
    raise ValueError(f"unknown kind {kind!r}")


# --- majority-vote readout ------------------------------------------------


def _check_eps(epsilon: float) -> None:
    if not 0.0 <= epsilon <= 0.5:
        raise ValueError(f"epsilon must lie in [0, 1/2], got {epsilon}")


def logical_error_m1(epsilon: float, N: int) -> Tuple[float, float]:
    """Majority vote over N independent bits (ties count as errors).

    exact = sum_{k <= N/2} C(N, k) (1 - eps)^k eps^(N - k);
    approx = [4 eps (1 - eps)]^(N/2) / sqrt(N).
    """
    _check_eps(epsilon)
    k = np.arange(N // 2 + 1)
    exact = math.exp(logsumexp(stats.binom.logpmf(k, N, 1.0 - epsilon)))
    approx = (4 * epsilon * (1 - epsilon)) ** (N / 2) / math.sqrt(N)
    return min(exact, 1.0), approx


def logical_error_m2(epsilon: float, N: int) -> Tuple[float, float]:
    """Sign readout of S~z on the Schmidt spinor state with eps = sin^2 chi.

    exact = sum_{k <= N/2} q_k / sum_k q_k with q_k = (1 - eps)^k eps^(N - k);
    approx = (eps / (1 - eps))^(N/2).
    """
    _check_eps(epsilon)
    if epsilon == 0:
        return 0.0, 0.0
    k = np.arange(N + 1)
    log_q = k * math.log1p(-epsilon) + (N - k) * math.log(epsilon)
    exact = math.exp(logsumexp(log_q[: N // 2 + 1]) - logsumexp(log_q))
    approx = (epsilon / (1 - epsilon)) ** (N / 2)
    return exact, approx


@dataclass(frozen=True)
class MonteCarloResult:
    estimate: float
    ci_low: float
    ci_high: float
    errors: int
    samples: int
    seed: int
    confidence: float


def _count_errors(args) -> int:
    seed_seq, epsilon, N, n = args
    rng = np.random.default_rng(seed_seq)
    flips = rng.binomial(N, epsilon, size=n)
    return int(np.count_nonzero(flips >= N - N // 2))


def monte_carlo_majority(
    epsilon: float,
    N: int,
    samples: int = 100_000,
    seed: int = DEFAULT_SEED,
    confidence: float = 0.95,
    workers: int = 1,
) -> MonteCarloResult:
    """Sampled majority-vote logical error with a Wilson interval.

    Samples are split across a fixed number of spawned streams so the result
    depends only on ``seed``, never on ``workers``.
    """
    _check_eps(epsilon)
    if samples < 1000:
        raise ValueError("at least 1000 samples are required")
    streams = np.random.SeedSequence(seed).spawn(MC_STREAMS)
    sizes = [samples // MC_STREAMS + (i < samples % MC_STREAMS) for i in range(MC_STREAMS)]
    jobs = [(s, epsilon, N, n) for s, n in zip(streams, sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_count_errors, jobs))
    else:
        counts = [_count_errors(j) for j in jobs]
    errors = sum(counts)
    ci = stats.binomtest(errors, samples).proportion_ci(confidence_level=confidence, method="wilson")
    return MonteCarloResult(errors / samples, float(ci.low), float(ci.high), errors, samples, seed, confidence)


def sigma_confidence(z: float) -> float:
    """Two-sided confidence level of a z-sigma interval."""
    return math.erf(z / math.sqrt(2))


def rotation_error_probability(theta: float) -> float:
    """Single-particle error of an over/under-rotated |theta, phi>>: sin^2(theta/2)."""
    return math.sin(theta / 2) ** 2


def residual_entanglement_probability(chi: float) -> float:
    return math.sin(chi) ** 2


@dataclass(frozen=True)
class ReadoutModel:
    epsilon: float
    N: int
    mode: str = "scs-independent"

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 0.5:
            raise ValueError("epsilon must lie in [0, 1/2)")
        if self.mode not in ("scs-independent", "spinor-entangled"):
            raise ValueError(f"unknown readout mode {self.mode!r}")

    def logical_error(self) -> Tuple[float, float]:
        fn = logical_error_m1 if self.mode == "scs-independent" else logical_error_m2
        return fn(self.epsilon, self.N)
