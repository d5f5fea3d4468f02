"""Bosonic Fock states versus symmetrized distinguishable-particle states."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, Sequence, Tuple

import numpy as np

from .exceptions import CapacityError
from .fock import fock_space, multinomial
from .states import build_multipartite_spinor, build_unipartite_spinor

DISTINGUISHABLE_CAP = 8

BasisString = Tuple[int, ...]


def _distinct_permutations(counts: Sequence[int]) -> Iterator[BasisString]:
    """Strings with counts[l] copies of level l, in lexicographic order."""
    n = sum(counts)
    counts = list(counts)
    prefix = []

    def rec():
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for level, c in enumerate(counts):
            if c:
                counts[level] -= 1
                prefix.append(level)
                yield from rec()
                prefix.pop()
                counts[level] += 1

    yield from rec()


@dataclass(frozen=True)
class SymmetrizedState:
    """Sparse state of N distinguishable L-level particles keyed by basis strings."""

    N: int
    L: int
    amplitudes: Dict[BasisString, complex] = field(repr=False)

    def vector(self) -> np.ndarray:
        v = np.zeros(self.L**self.N, dtype=complex)
        for s, a in self.amplitudes.items():
            v[np.ravel_multi_index(s, (self.L,) * self.N)] += a
        return v

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def transposed(self, p: int, q: int) -> "SymmetrizedState":
        out = {}
        for s, a in self.amplitudes.items():
            t = list(s)
            t[p], t[q] = t[q], t[p]
            out[tuple(t)] = a
        return SymmetrizedState(self.N, self.L, out)

    def symmetry_error(self) -> float:
        """Largest change under any transposition of particle labels."""
        worst = 0.0
        for p in range(self.N):
            for q in range(p + 1, self.N):
                moved = self.transposed(p, q).amplitudes
                keys = set(moved) | set(self.amplitudes)
                diff = max(abs(moved.get(k, 0) - self.amplitudes.get(k, 0)) for k in keys)
                worst = max(worst, diff)
        return worst


def _check_cap(N: int) -> None:
    if N > DISTINGUISHABLE_CAP:
        raise CapacityError(f"distinguishable expansion capped at N = {DISTINGUISHABLE_CAP}, got {N}")


def fock_to_symmetrized(occ: Sequence[int]) -> SymmetrizedState:
    """Normalized equal superposition of all distinct orderings of the occupation."""
    occ = tuple(int(k) for k in occ)
    N = sum(occ)
    _check_cap(N)
    amp = 1.0 / math.sqrt(multinomial(occ))
    return SymmetrizedState(N, len(occ), {s: amp for s in _distinct_permutations(occ)})


def antisymmetrizer_norm(state: SymmetrizedState) -> float:
    """Norm of the totally antisymmetric projection (dense; small N only)."""
    from itertools import permutations

    shape = (state.L,) * state.N
    t = state.vector().reshape(shape)
    acc = np.zeros_like(t)
    for perm in permutations(range(state.N)):
        inversions = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])
        acc += (-1) ** inversions * np.transpose(t, perm)
    return float(np.linalg.norm(acc)) / math.factorial(state.N)


def _product_vector(psi: np.ndarray, N: int) -> np.ndarray:
    v = np.ones(1, dtype=complex)
    for _ in range(N):
        v = np.kron(v, psi)
    return v


def embed_unipartite(amplitudes: np.ndarray, N: int, L: int) -> np.ndarray:
    """Dense distinguishable image of a Fock-basis vector."""
    space = fock_space(N, L)
    out = np.zeros(L**N, dtype=complex)
    for c, occ in zip(amplitudes, space.states):
        if c != 0:
            out += c * fock_to_symmetrized(occ).vector()
    return out


def unipartite_equivalence_check(psi, N: int) -> float:
    """Fidelity between |psi>^(tensor N) and the embedded spinor state |psi>>."""
    psi = np.asarray(psi, dtype=complex)
    _check_cap(N)
    L = psi.size
    spinor = build_unipartite_spinor(psi, N)
    image = embed_unipartite(spinor.amplitudes, N, L)
    direct = _product_vector(psi, N)
    return float(abs(np.vdot(image, direct)) ** 2 / (np.vdot(image, image).real * np.vdot(direct, direct).real))


def _embed_bipartite(amplitudes: np.ndarray, N: int) -> np.ndarray:
    """Image with qubit order (subsystem-1 particles, subsystem-2 particles)."""
    space = fock_space(N, 2)
    images = [fock_to_symmetrized(occ).vector() for occ in space.states]
    out = np.zeros(4**N, dtype=complex)
    for i1, v1 in enumerate(images):
        for i2, v2 in enumerate(images):
            c = amplitudes[i1, i2]
            if c != 0:
                out += c * np.kron(v1, v2)
    return out


def bipartite_inequivalence_witness(alpha, beta, gamma, omega, N: int = 2) -> float:
    """1 - F between the locally embedded spinor state and the N-copy molecule state.

    The micro state is alpha|00> + beta|01> + gamma|10> + omega|11>.  Both
    sides are normalized, which fixes the one free relative scale between
    them; the deficit vanishes exactly when alpha omega = beta gamma.
    """
    psi = np.array([alpha, beta, gamma, omega], dtype=complex)
    if abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise ValueError("coefficients must be normalized")
    if 2 * N > DISTINGUISHABLE_CAP:
        raise CapacityError(f"2N = {2 * N} qubits exceeds the distinguishable cap")
    spinor = build_multipartite_spinor(psi.reshape(2, 2), N)
    image = _embed_bipartite(spinor.amplitudes, N)
    # molecule order (1_1, 2_1, 1_2, 2_2, ...) -> (1_1, ..., 1_N, 2_1, ..., 2_N)
    copies = _product_vector(psi, N).reshape((2,) * (2 * N))
    order = [2 * n for n in range(N)] + [2 * n + 1 for n in range(N)]
    direct = np.transpose(copies, order).reshape(-1)
    fid = abs(np.vdot(image, direct)) ** 2 / np.vdot(image, image).real
    return float(max(0.0, 1.0 - fid))
