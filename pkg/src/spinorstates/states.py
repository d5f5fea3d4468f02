"""Spinor (Schwinger-boson) states, spin coherent states and local unitaries.

Subsystems are labelled ``1..M`` to match the physics notation; levels are
``0..L-1``.  A :class:`SpinorState` stores its normalized amplitudes as a dense
tensor of shape ``(D(N, L),) * M`` over the product Fock basis, together with
``ln N_Psi`` of the unnormalized expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .exceptions import CapacityError, UnsupportedConfigurationError
from .fock import FockSpace, OccupationVector, dimension, fock_space, quadratic_operator

MEMORY_CAP = 5_000_000
NORM_TOL = 1e-12
UNITARY_TOL = 1e-12

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _check_normalized(psi: np.ndarray, tol: float = NORM_TOL) -> None:
    norm2 = float(np.sum(np.abs(psi) ** 2))
    if abs(norm2 - 1.0) > tol:
        raise ValueError(f"microscopic wavefunction is not normalized (sum |psi|^2 = {norm2!r})")


def _fix_global_phase(amps: np.ndarray) -> np.ndarray:
    flat = amps.reshape(-1)
    peak = np.max(np.abs(flat))
    if peak == 0:
        return amps
    first = flat[np.argmax(np.abs(flat) > 1e-12 * peak)]
    return amps * (abs(first) / first)


@dataclass(frozen=True)
class SpinorState:
    """Normalized pure state on M subsystems of N bosons over L levels each."""

    N: int
    M: int
    L: int
    amplitudes: np.ndarray = field(repr=False)
    log_norm: float = math.nan

    def __post_init__(self):
        D = dimension(self.N, self.L)
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (D,) * self.M:
            raise ValueError(f"amplitude tensor has shape {amps.shape}, expected {(D,) * self.M}")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def space(self) -> FockSpace:
        return fock_space(self.N, self.L)

    @property
    def normalized(self) -> bool:
        return abs(self.norm2() - 1.0) <= 1e-10

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    @property
    def vector(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    def entries(self) -> Iterator[Tuple[Tuple[OccupationVector, ...], complex]]:
        """Nonzero amplitudes keyed by the M-tuple of occupation vectors."""
        states = self.space.states
        for idx in zip(*np.nonzero(self.amplitudes)):
            yield tuple(states[i] for i in idx), complex(self.amplitudes[idx])

    def overlap(self, other: "SpinorState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "SpinorState") -> float:
        return abs(self.overlap(other)) ** 2

    def to_json(self) -> dict:
        return state_to_json(self)


@dataclass(frozen=True)
class ScsState:
    """Spin coherent state |Psi>^{(x)N}, kept as its microscopic tensor only."""

    psi: np.ndarray = field(repr=False)
    N: int = 1

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        _check_normalized(psi)
        if self.N < 1:
            raise ValueError("duplication factor N must be >= 1")
        object.__setattr__(self, "psi", _frozen(psi))

    @property
    def M(self) -> int:
        return self.psi.ndim

    @property
    def L(self) -> int:
        return self.psi.shape[0]

    @property
    def vector(self) -> np.ndarray:
        return self.psi.reshape(-1)


@dataclass(frozen=True)
class LocalUnitary:
    """Single-particle unitary ``matrix`` (u) on subsystem ``subsystem``.

    When a Hermitian ``generator`` H is given, ``matrix == expm(-i * time * H)``
    and the many-body operator is ``exp(-i * time * sum H_ll' a†_l a_l')``.
    """

    subsystem: int
    matrix: np.ndarray = field(repr=False)
    generator: Optional[np.ndarray] = field(default=None, repr=False)
    time: float = 1.0

    def __post_init__(self):
        u = np.asarray(self.matrix, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError("unitary matrix must be square")
        err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
        if err > UNITARY_TOL:
            raise ValueError(f"matrix is not unitary (max |u†u - I| = {err:.3g})")
        if self.subsystem < 1:
            raise ValueError("subsystems are numbered from 1")
        object.__setattr__(self, "matrix", _frozen(u))
        if self.generator is not None:
            object.__setattr__(self, "generator", _frozen(np.asarray(self.generator, dtype=complex)))

    @property
    def L(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_generator(cls, subsystem: int, H, time: float = 1.0) -> "LocalUnitary":
        H = np.asarray(H, dtype=complex)
        if np.max(np.abs(H - H.conj().T)) > 1e-12:
            raise ValueError("generator must be Hermitian")
        return cls(subsystem, scipy.linalg.expm(-1j * time * H), H, time)

    @classmethod
    def identity(cls, subsystem: int, L: int = 2) -> "LocalUnitary":
        return cls(subsystem, np.eye(L), np.zeros((L, L)), 1.0)

    @classmethod
    def rotation(cls, subsystem: int, axis, angle: float) -> "LocalUnitary":
        """exp(-i angle/2 n.S): rotates the Bloch vector by ``angle`` about ``n``."""
        n = np.asarray(axis, dtype=float)
        n = n / np.linalg.norm(n)
        H = 0.5 * (n[0] * PAULI["x"] + n[1] * PAULI["y"] + n[2] * PAULI["z"])
        return cls.from_generator(subsystem, H, angle)

    def adjoint(self) -> "LocalUnitary":
        if self.generator is not None:
            return LocalUnitary(self.subsystem, self.matrix.conj().T, self.generator, -self.time)
        return LocalUnitary(self.subsystem, self.matrix.conj().T)

    def bloch_rotation(self) -> np.ndarray:
        """O with u† sigma^i u = sum_j O[i, j] sigma^j (L = 2 only)."""
        if self.L != 2:
            raise UnsupportedConfigurationError("Bloch rotation needs L = 2")
        u = self.matrix
        axes = ("x", "y", "z")
        return np.array(
            [[0.5 * np.trace(PAULI[j] @ u.conj().T @ PAULI[i] @ u).real for j in axes] for i in axes]
        )

    def many_body(self, N: int) -> np.ndarray:
        """Dense D(N, L) x D(N, L) matrix of the operator on one subsystem."""
        if self.generator is not None:
            q = quadratic_operator(N, self.L, self.generator)
            return scipy.linalg.expm(-1j * self.time * q)
        return symmetric_power(self.matrix, N)


def symmetric_power(u: np.ndarray, N: int) -> np.ndarray:
    """Action of u on the N-boson space: |k> -> prod_l (sum_l' u[l', l] a†_l')^{k_l} |vac> / sqrt(k!)."""
    u = np.asarray(u, dtype=complex)
    L = u.shape[0]
    space = fock_space(N, L)
    occ = space.occupations
    out = np.zeros((len(space), len(space)), dtype=complex)
    for col in range(len(space)):
        vec = np.ones(1, dtype=complex)
        n = 0
        for l in range(L):
            for _ in range(occ[col, l]):
                vec = _linear_creation(vec, n, L, u[:, l])
                n += 1
        out[:, col] = vec / math.sqrt(math.prod(math.factorial(int(k)) for k in occ[col]))
    return out


def _linear_creation(vec: np.ndarray, n: int, L: int, coeffs) -> np.ndarray:
    """Apply sum_l coeffs[l] a†_l to a vector in the n-boson space."""
    out = np.zeros(dimension(n + 1, L), dtype=complex)
    for l, c in enumerate(coeffs):
        if c == 0:
            continue
        targets, factors = fock_space(n, L).raise_map(l)
        out[targets] += c * factors * vec
    return out


def _expand(psi: np.ndarray, N: int, cap: int = MEMORY_CAP) -> Tuple[np.ndarray, float]:
    """(sum Psi_{l1..lM} prod_m a†_{m,l_m})^N |vac> in the product Fock basis.

    Returns ``(scaled, log_scale)`` with the true amplitudes equal to
    ``scaled * exp(log_scale)``; rescaling after every multiplication keeps the
    (N!)^M growth out of floating point range.
    """
    psi = np.asarray(psi, dtype=complex)
    M, L = psi.ndim, psi.shape[0]
    if any(s != L for s in psi.shape):
        raise UnsupportedConfigurationError("all subsystems must have the same level count")
    size = dimension(N, L) ** M
    if size > cap:
        raise CapacityError(
            f"D(N={N}, L={L})^M = {dimension(N, L)}^{M} = {size} amplitudes exceeds the cap {cap}"
        )
    terms = [(idx, psi[idx]) for idx in zip(*np.nonzero(psi))]
    cur = np.ones((1,) * M, dtype=complex)
    log_scale = 0.0
    for n in range(N):
        D_next = dimension(n + 1, L)
        new = np.zeros((D_next,) * M, dtype=complex)
        for idx, value in terms:
            maps = [fock_space(n, L).raise_map(l) for l in idx]
            factor = reduce(np.multiply.outer, [f for _, f in maps])
            new[np.ix_(*[t for t, _ in maps])] += value * factor * cur
        peak = np.max(np.abs(new))
        if peak == 0:
            raise ValueError("expansion vanished identically")
        new /= peak
        log_scale += math.log(peak)
        cur = new
    return cur, log_scale


def _normalize_expansion(scaled: np.ndarray, log_scale: float) -> Tuple[np.ndarray, float]:
    norm2 = float(np.sum(np.abs(scaled) ** 2))
    log_norm = 2.0 * log_scale + math.log(norm2)
    return _fix_global_phase(scaled / math.sqrt(norm2)), log_norm


def build_multipartite_spinor(psi, N: int, cap: int = MEMORY_CAP) -> SpinorState:
    """Normalized (sum Psi a†...a†)^N |vac> / sqrt(N_Psi) for an L^M tensor ``psi``."""
    psi = np.asarray(psi, dtype=complex)
    _check_normalized(psi)
    if N < 1:
        raise ValueError("N must be >= 1")
    amps, log_norm = _normalize_expansion(*_expand(psi, N, cap))
    return SpinorState(N, psi.ndim, psi.shape[0], amps, log_norm)


def build_unipartite_spinor(psi, N: int) -> SpinorState:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("unipartite spinor needs a vector of length L")
    return build_multipartite_spinor(psi, N)


def coherent_spinor(theta: float, phi: float, N: int) -> SpinorState:
    """|theta, phi>> = (cos(theta/2) a† + e^{i phi} sin(theta/2) b†)^N |vac> / sqrt(N!)."""
    return build_unipartite_spinor(
        [math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)], N
    )


def normalization_factor(psi, N: int, cap: int = MEMORY_CAP) -> float:
    """ln N_Psi of the unnormalized expansion."""
    psi = np.asarray(psi, dtype=complex)
    _check_normalized(psi)
    scaled, log_scale = _expand(psi, N, cap)
    return 2.0 * log_scale + math.log(float(np.sum(np.abs(scaled) ** 2)))


def schmidt_micro(chi: float) -> np.ndarray:
    return np.array([[math.cos(chi), 0.0], [0.0, math.sin(chi)]], dtype=complex)


def build_schmidt_bipartite(
    chi: float,
    N: int,
    V1: Optional[LocalUnitary] = None,
    V2: Optional[LocalUnitary] = None,
) -> SpinorState:
    """V1 V2 (cos chi a1† a2† + sin chi b1† b2†)^N |vac>, normalized."""
    state = build_multipartite_spinor(schmidt_micro(chi), N)
    for V, m in ((V1, 1), (V2, 2)):
        if V is None:
            continue
        if V.subsystem != m or V.L != 2:
            raise ValueError(f"V{m} must act on subsystem {m} with L = 2")
        state = apply_local_unitary(state, V)
    return state


def epr_state(N: int) -> SpinorState:
    return build_schmidt_bipartite(math.pi / 4, N)


def apply_local_unitary(state: SpinorState, V: LocalUnitary) -> SpinorState:
    """Apply the many-body image of V on subsystem ``V.subsystem``."""
    if not 1 <= V.subsystem <= state.M:
        raise IndexError(f"subsystem {V.subsystem} out of range 1..{state.M}")
    if V.L != state.L:
        raise ValueError(f"unitary has L={V.L}, state has L={state.L}")
    U = V.many_body(state.N)
    axis = V.subsystem - 1
    moved = np.tensordot(U, state.amplitudes, axes=([1], [axis]))
    return SpinorState(state.N, state.M, state.L, np.moveaxis(moved, 0, axis), state.log_norm)


def apply_micro_unitary(psi, V: LocalUnitary) -> np.ndarray:
    """The same local operation on the microscopic L^M tensor."""
    psi = np.asarray(psi, dtype=complex)
    axis = V.subsystem - 1
    return np.moveaxis(np.tensordot(V.matrix, psi, axes=([1], [axis])), 0, axis)


def scs_from_micro(psi, N: int) -> ScsState:
    return ScsState(np.asarray(psi, dtype=complex), N)


def state_to_json(state: SpinorState) -> dict:
    amps = state.amplitudes
    peak = float(np.max(np.abs(amps)))
    shift = math.log(peak) if peak > 0 else 0.0
    entries: List[dict] = []
    for occs, amp in state.entries():
        scaled = amp / peak if peak > 0 else amp
        entries.append({"occ": [list(o) for o in occs], "re": scaled.real, "im": scaled.imag})
    return {
        "N": state.N,
        "M": state.M,
        "L": state.L,
        "log_shift": shift,
        "log_norm": state.log_norm,
        "entries": entries,
    }


def state_from_json(doc: dict) -> SpinorState:
    N, M, L = int(doc["N"]), int(doc["M"]), int(doc["L"])
    space = fock_space(N, L)
    amps = np.zeros((len(space),) * M, dtype=complex)
    scale = math.exp(doc.get("log_shift", 0.0))
    for entry in doc["entries"]:
        idx = tuple(space.index[tuple(o)] for o in entry["occ"])
        amps[idx] = complex(entry["re"], entry["im"]) * scale
    return SpinorState(N, M, L, amps, doc.get("log_norm", math.nan))


def random_micro_state(shape: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return psi / np.linalg.norm(psi)


def random_hermitian(L: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(L, L)) + 1j * rng.normal(size=(L, L))
    return (a + a.conj().T) / 2
