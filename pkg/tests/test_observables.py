import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinorstates.exceptions import UnsupportedConfigurationError
from spinorstates.observables import (
    CovarianceReport,
    SpinOperator,
    build_h0,
    correlation,
    correlation_matrix,
    covariance_report,
    expectation,
    identity_observable,
    local_spin_vector,
    pauli_observable,
    scs_central_moment3,
    scs_covariance,
    scs_covariance_report,
    scs_expectation,
    spin_matrix,
)
from spinorstates.states import (
    LocalUnitary,
    ScsState,
    apply_local_unitary,
    build_multipartite_spinor,
    build_schmidt_bipartite,
    build_unipartite_spinor,
    epr_state,
    random_micro_state,
    schmidt_micro,
)

from conftest import SIGMA, bipartite_ops, collective_pauli, dense_moments, schwinger


@pytest.mark.parametrize("N", [1, 2, 5, 13])
def test_spin_matrices_match_angular_momentum(N):
    S = schwinger(N)
    for a in "xyz":
        assert np.allclose(spin_matrix(a, N).toarray(), S[a], atol=1e-13)
    plus = spin_matrix("plus", N).toarray()
    assert np.allclose(plus + plus.conj().T, S["x"])


def test_spin_algebra():
    N = 6
    sx, sy, sz = (spin_matrix(a, N).toarray() for a in "xyz")
    assert np.allclose(sx @ sy - sy @ sx, 2j * sz)
    assert np.allclose(sx @ sx + sy @ sy + sz @ sz, N * (N + 2) * np.eye(N + 1))


@pytest.mark.parametrize("N", [1, 3])
def test_covariance_report_vs_dense(N, rng):
    state = build_multipartite_spinor(random_micro_state((2, 2), rng), N)
    means, V, Om = dense_moments(state.amplitudes.reshape(-1), bipartite_ops(N))
    rep = covariance_report(state)
    assert np.allclose(rep.means, means, atol=1e-12)
    assert np.allclose(rep.V, V, atol=1e-12)
    assert np.allclose(rep.Omega, Om, atol=1e-12)


def test_rotated_frame_recovers_schmidt_moments():
    chi, N = 0.37, 4
    V1 = LocalUnitary.rotation(1, [1, 1, 0], 0.8)
    V2 = LocalUnitary.rotation(2, [0, 0.3, 1], -1.2)
    rotated = build_schmidt_bipartite(chi, N, V1, V2)
    ref = covariance_report(build_schmidt_bipartite(chi, N))
    rep = covariance_report(rotated, basis_unitaries=(V1, V2))
    assert np.allclose(rep.V, ref.V, atol=1e-11)
    assert np.allclose(rep.means, ref.means, atol=1e-11)
    # without the frame the moments differ
    assert not np.allclose(covariance_report(rotated).V, ref.V, atol=1e-3)


def test_expectation_products_and_complex():
    st_ = epr_state(3)
    sz1 = SpinOperator("z", 1)
    sz2 = SpinOperator("z", 2)
    assert expectation(st_, [sz1, sz2]) == pytest.approx(covariance_report(st_).V[2, 5])
    # S+ has a complex expectation on a generic state
    uni = build_unipartite_spinor(np.array([0.6, 0.8j]), 4)
    val = expectation(uni, SpinOperator("plus", 1))
    assert isinstance(val, complex)
    with pytest.raises(ValueError):
        SpinOperator("w")


def test_local_spin_vector_coherent():
    theta, phi, N = 1.0, 0.5, 7
    uni = build_unipartite_spinor([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)], N)
    v = local_spin_vector(uni, 1)
    n = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
    assert np.allclose(v, N * n)


def test_correlation_matrix_nan_and_limit():
    state = build_schmidt_bipartite(0.0, 4)  # product |N,0>|N,0>, Var z = 0
    rep = covariance_report(state)
    assert np.isnan(rep.Corr[2, 5])
    assert correlation(state, "z") == 1.0
    assert correlation(state, "x") == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(np.diag(correlation_matrix(np.eye(3))), 1.0)


@pytest.mark.parametrize("chi", [0.2, 0.6, 1.2])
def test_correlations_exact_relations(chi):
    state = build_schmidt_bipartite(chi, 9)
    s2 = math.sin(2 * chi)
    assert correlation(state, "x") == pytest.approx(s2, abs=1e-12)
    assert correlation(state, "y") == pytest.approx(-s2, abs=1e-12)
    assert correlation(state, "z") == pytest.approx(1.0, abs=1e-12)


def test_covariance_report_serialization():
    rep = covariance_report(epr_state(2))
    doc = rep.to_json()
    assert doc["operator_set"] == list(rep.operator_set)
    rows = rep.csv_rows()
    assert len(rows) >= 6
    again = CovarianceReport.from_moments(rep.means, rep.V, rep.Omega)
    assert np.allclose(again.V, rep.V)


def test_report_requires_bipartite_qubits(rng):
    with pytest.raises(UnsupportedConfigurationError):
        covariance_report(build_unipartite_spinor(random_micro_state((2,), rng), 2))


# --- spin coherent states vs explicit N-copy tensor products -------------


@pytest.mark.parametrize("N", [1, 2, 3])
def test_scs_report_vs_tensor_product(N, rng):
    psi = random_micro_state((2, 2), rng)
    vec = psi.reshape(-1)
    for _ in range(N - 1):
        vec = np.kron(vec, psi.reshape(-1))
    ops = [collective_pauli(a, site, 2, N) for site in (0, 1) for a in "xyz"]
    means, V, Om = dense_moments(vec, ops)
    rep = scs_covariance_report(ScsState(psi, N))
    assert np.allclose(rep.means, means, atol=1e-12)
    assert np.allclose(rep.V, V, atol=1e-12)
    assert np.allclose(rep.Omega, Om, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 40), st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_scs_linearity(N, theta, phi):
    psi = np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])
    scs = ScsState(psi, N)
    z = pauli_observable("z", 1, M=1)
    x = pauli_observable("x", 1, M=1)
    assert scs_expectation(scs, z) == pytest.approx(N * math.cos(theta), abs=1e-9)
    assert scs_covariance(scs, z, z) == pytest.approx(N * math.sin(theta) ** 2, abs=1e-9)
    combo = 2.0 * z + x - identity_observable(2)
    assert scs_expectation(scs, combo) == pytest.approx(
        2 * scs_expectation(scs, z) + scs_expectation(scs, x) - N, abs=1e-9
    )


def test_scs_third_moment_bernoulli():
    # sigma^z on cos(t/2)|0> + sin(t/2)|1>: third central moment of a +-1 variable
    t, N = 0.9, 5
    p = math.cos(t / 2) ** 2
    mu = 2 * p - 1
    m3 = p * (1 - mu) ** 3 + (1 - p) * (-1 - mu) ** 3
    scs = ScsState(np.array([math.cos(t / 2), math.sin(t / 2)]), N)
    z = pauli_observable("z", 1, M=1)
    assert scs_central_moment3(scs, z, z, z) == pytest.approx(N * m3)


# --- Hamiltonian ----------------------------------------------------------


@pytest.mark.parametrize("N", [1, 2, 5, 10])
@pytest.mark.parametrize("chi", [0.0, 0.3, math.pi / 4, 1.2, math.pi / 2])
def test_h0_eigenvalue(N, chi):
    v = build_schmidt_bipartite(chi, N).vector
    H = build_h0(chi, N)
    assert np.linalg.norm(H @ v + N * (N + 2) * v) <= 1e-10 * N * N


def test_h0_is_hermitian_and_ground_state():
    chi, N = 0.5, 4
    H = build_h0(chi, N).toarray()
    assert np.allclose(H, H.conj().T)
    assert np.linalg.eigvalsh(H)[0] == pytest.approx(-N * (N + 2))


@pytest.mark.parametrize("chi", [0.3, 1.1])
def test_h0_printed_zeeman_sign_fails(chi):
    # with the opposite Zeeman sign the Schmidt state is not an eigenvector
    N = 4
    v = build_schmidt_bipartite(chi, N).vector
    w = build_h0(chi, N, zeeman_sign=+1) @ v
    lam = np.vdot(v, w).real
    assert np.linalg.norm(w - lam * v) > 0.1


def test_conftest_collective_pauli():
    # two copies of a single qubit: sum sigma^z on |00> is 2
    op = collective_pauli("z", 0, 1, 2)
    assert np.allclose(np.diag(op).real, [2, 0, 0, -2])
    assert np.allclose(SIGMA["z"] @ SIGMA["z"], np.eye(2))
    assert schmidt_micro(0.0)[0, 0] == 1
