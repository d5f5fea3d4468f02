"""Independent oracles shared by the test modules.

Nothing here imports the operator code under test: spin matrices come from
angular-momentum ladder formulas, collective operators from explicit Kronecker
products over distinguishable qubits.
"""

from __future__ import annotations

import math
from functools import reduce

import numpy as np
import pytest

SIGMA = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def angular_momentum(N: int):
    """(Jx, Jy, Jz) for j = N/2 in the basis m = j, j-1, ..., -j."""
    j = N / 2
    m = j - np.arange(N + 1)
    Jz = np.diag(m).astype(complex)
    Jp = np.zeros((N + 1, N + 1), dtype=complex)
    for i in range(1, N + 1):
        mm = m[i]
        Jp[i - 1, i] = math.sqrt(j * (j + 1) - mm * (mm + 1))
    Jm = Jp.conj().T
    return (Jp + Jm) / 2, (Jp - Jm) / 2j, Jz


def schwinger(N: int):
    """Dict of S^j = 2 J^j (a†a - b†b convention for z)."""
    Jx, Jy, Jz = angular_momentum(N)
    return {"x": 2 * Jx, "y": 2 * Jy, "z": 2 * Jz}


def kron_all(ops):
    return reduce(np.kron, ops)


def collective_pauli(axis: str, site: int, n_sites: int, copies: int) -> np.ndarray:
    """sum over copies of sigma^axis on ``site`` of each n_sites-qubit copy."""
    dim = 2 ** (n_sites * copies)
    out = np.zeros((dim, dim), dtype=complex)
    for c in range(copies):
        ops = [np.eye(2)] * (n_sites * copies)
        ops[c * n_sites + site] = SIGMA[axis]
        out += kron_all(ops)
    return out


def dense_moments(vec: np.ndarray, ops):
    """(means, V, Omega) by direct matrix products."""
    vec = vec / np.linalg.norm(vec)
    n = len(ops)
    means = np.array([np.vdot(vec, A @ vec).real for A in ops])
    V = np.zeros((n, n))
    Om = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            ab = np.vdot(vec, ops[a] @ ops[b] @ vec)
            ba = np.vdot(vec, ops[b] @ ops[a] @ vec)
            V[a, b] = 0.5 * (ab + ba).real - means[a] * means[b]
            Om[a, b] = (-1j * (ab - ba)).real
    return means, V, Om


def bipartite_ops(N: int):
    S = schwinger(N)
    I = np.eye(N + 1)
    return [np.kron(S[a], I) for a in "xyz"] + [np.kron(I, S[a]) for a in "xyz"]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
