import math

import numpy as np
import pytest

from spinorstates import entanglement as ent
from spinorstates.exceptions import UnsupportedConfigurationError
from spinorstates.observables import covariance_report
from spinorstates.states import (
    ScsState,
    build_multipartite_spinor,
    build_schmidt_bipartite,
    build_unipartite_spinor,
    epr_state,
    random_micro_state,
    schmidt_micro,
)

from conftest import bipartite_ops, collective_pauli


def density_moments(rho, ops):
    """(V + i Omega / 2) from a (possibly non-positive) Hermitian matrix rho."""
    n = len(ops)
    mean = np.array([np.trace(rho @ A).real for A in ops])
    out = np.zeros((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            ab = np.trace(rho @ ops[a] @ ops[b])
            ba = np.trace(rho @ ops[b] @ ops[a])
            V = 0.5 * (ab + ba).real - mean[a] * mean[b]
            Om = (-1j * (ab - ba)).real
            out[a, b] = V + 0.5j * Om
    return out


def partial_transpose_rho(vec, d):
    rho = np.outer(vec, vec.conj()).reshape(d, d, d, d)
    return rho.transpose(0, 3, 2, 1).reshape(d * d, d * d)


@pytest.mark.parametrize("N", [1, 2, 4])
def test_ppt_matrix_vs_partially_transposed_density(N, rng):
    state = build_multipartite_spinor(random_micro_state((2, 2), rng), N)
    rho_pt = partial_transpose_rho(state.vector, N + 1)
    oracle = density_moments(rho_pt, bipartite_ops(N))
    rep = covariance_report(state)
    assert np.allclose(ent.ppt_matrix(rep.V, rep.Omega), oracle, atol=1e-11)


def test_ppt_zero_for_physical_matrix_without_transpose(rng):
    state = build_multipartite_spinor(random_micro_state((2, 2), rng), 3)
    rep = covariance_report(state)
    # the untransposed uncertainty matrix is positive semidefinite for any state
    assert np.linalg.eigvalsh(rep.V + 0.5j * rep.Omega)[0] > -1e-10


def test_entropy_vs_dense_reduced_density(rng):
    state = build_multipartite_spinor(random_micro_state((2, 2), rng), 5)
    d = 6
    rho = np.outer(state.vector, state.vector.conj()).reshape(d, d, d, d)
    rho1 = np.einsum("ijkj->ik", rho)
    lam = np.linalg.eigvalsh(rho1)
    lam = lam[lam > 1e-15]
    assert ent.von_neumann_entropy(state) == pytest.approx(-np.sum(lam * np.log2(lam)), abs=1e-10)
    r = ent.reduced_state(state)
    assert np.allclose(r.density_matrix, rho1, atol=1e-12)
    r2 = ent.reduced_state(state, keep=2)
    assert r2.entropy() == pytest.approx(r.entropy(), abs=1e-10)


@pytest.mark.parametrize("chi", [0.1, 0.5, math.pi / 4, 1.3])
def test_schmidt_entropy_consistent(chi):
    N = 8
    assert ent.schmidt_entropy(chi, N) == pytest.approx(
        ent.von_neumann_entropy(build_schmidt_bipartite(chi, N)), abs=1e-10
    )


def test_scs_entropy_vs_tensor_product():
    chi, N = 0.6, 2
    psi = schmidt_micro(chi).reshape(-1)
    vec = np.kron(psi, psi)  # qubits (1a, 2a, 1b, 2b)
    t = np.outer(vec, vec.conj()).reshape([2] * 8)
    # trace out the subsystem-2 qubits (positions 1, 3 and their primes 5, 7)
    red = np.einsum("aibjcidj->abcd", t).reshape(4, 4)
    lam = np.linalg.eigvalsh(red)
    lam = lam[lam > 1e-15]
    assert ent.scs_entropy(chi, N) == pytest.approx(-np.sum(lam * np.log2(lam)), abs=1e-10)


def test_entropy_maxima():
    N = 50
    assert ent.schmidt_entropy(math.pi / 4, N) == pytest.approx(math.log2(N + 1), abs=1e-9)
    assert ent.scs_entropy(math.pi / 4, N) == pytest.approx(N, abs=1e-9)
    assert ent.schmidt_entropy(0.0, N) == 0.0
    grid = np.linspace(0, math.pi / 2, 101)
    assert np.argmax([ent.schmidt_entropy(c, N) for c in grid]) == 50


def test_ppt_figure_behaviour():
    N = 50
    chis = np.arange(1, 100) * math.pi / 200
    for chi in chis:
        if 0.02 < chi < math.pi / 4 - 0.02 or math.pi / 4 + 0.02 < chi < math.pi / 2 - 0.02:
            assert ent.exact_ppt_min_eig(chi, N) < 0
            assert ent.scs_ppt_min_eig(chi, N) < 0
    assert abs(ent.exact_ppt_min_eig(math.pi / 4, N)) <= 1e-6
    for chi in (0.0, math.pi / 2):
        assert ent.exact_ppt_min_eig(chi, N) <= 1e-9
        assert ent.exact_ppt_min_eig(chi, N) >= -1e-9


def test_ppt_exact_matches_dense_report():
    for chi in (0.3, 1.0):
        rep = covariance_report(build_schmidt_bipartite(chi, 6))
        assert ent.ppt_criterion_min_eig(rep) == pytest.approx(ent.exact_ppt_min_eig(chi, 6), abs=1e-9)


def test_scs_ppt_matches_tensor_oracle():
    chi, N = 0.5, 2
    psi = schmidt_micro(chi)
    vec = np.kron(psi.reshape(-1), psi.reshape(-1))
    ops = [collective_pauli(a, site, 2, N) for site in (0, 1) for a in "xyz"]
    rho = np.outer(vec, vec.conj()).reshape([2] * 8)
    # transpose the subsystem-2 qubit of every copy (positions 1 and 3)
    rho_pt = rho.transpose(0, 5, 2, 7, 4, 1, 6, 3).reshape(16, 16)
    oracle = density_moments(rho_pt, ops)
    assert np.linalg.eigvalsh(oracle)[0] == pytest.approx(ent.scs_ppt_min_eig(chi, N), abs=1e-10)


def test_hoffman_takeuchi():
    N = 50
    assert ent.exact_hoffman_takeuchi(math.pi / 4, N) == pytest.approx(-4 * N, abs=1e-9)
    assert ent.scs_hoffman_takeuchi(math.pi / 4, N) == pytest.approx(-4 * N, abs=1e-9)
    for chi in np.linspace(0.01, math.pi / 2 - 0.01, 60):
        assert ent.exact_hoffman_takeuchi(chi, N) < 0
    grid = np.linspace(0, math.pi / 2, 101)
    assert np.argmin([ent.exact_hoffman_takeuchi(c, N) for c in grid]) == 50
    # product state saturates the separable bound
    assert ent.exact_hoffman_takeuchi(0.0, N) == pytest.approx(0.0, abs=1e-9)


def test_hoffman_takeuchi_sources():
    st = build_schmidt_bipartite(0.4, 5)
    val = ent.hoffman_takeuchi(st)
    assert val == pytest.approx(ent.exact_hoffman_takeuchi(0.4, 5), abs=1e-9)
    assert ent.hoffman_takeuchi(covariance_report(st), 5) == pytest.approx(val)
    scs = ScsState(schmidt_micro(0.4), 5)
    assert ent.hoffman_takeuchi(scs) == pytest.approx(ent.scs_hoffman_takeuchi(0.4, 5), abs=1e-9)
    with pytest.raises(ValueError):
        ent.hoffman_takeuchi(covariance_report(st))
    with pytest.raises(TypeError):
        ent.hoffman_takeuchi("state")


@pytest.mark.parametrize("N", [1, 10, 50])
def test_epr_variances_vanish(N):
    assert np.allclose(ent.epr_variances(epr_state(N)), 0.0, atol=1e-9)


def test_epr_variances_dense():
    st = build_schmidt_bipartite(0.3, 3)
    S = bipartite_ops(3)
    v = st.vector
    def var(A):
        m = np.vdot(v, A @ v).real
        return np.vdot(v, A @ A @ v).real - m * m
    expect = (var(S[2] - S[5]), var(S[0] - S[3]), var(S[1] + S[4]))
    assert np.allclose(ent.epr_variances(st), expect, atol=1e-11)


def test_reduced_state_validation(rng):
    with pytest.raises(ValueError):
        ent.ReducedState.diagonal(np.array([0.5, 0.6]))
    with pytest.raises(UnsupportedConfigurationError):
        ent.reduced_state(build_unipartite_spinor(random_micro_state((2,), rng), 3))
    assert ent.binary_entropy(0.5) == pytest.approx(1.0)
