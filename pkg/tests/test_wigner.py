import math

import numpy as np
import pytest
import scipy.special
from sympy import Rational
from sympy.physics.quantum.cg import CG

from spinorstates import wigner as wg
from spinorstates.entanglement import ReducedState, reduced_state
from spinorstates.exceptions import CapacityError, UnsupportedConfigurationError
from spinorstates.states import (
    LocalUnitary,
    apply_local_unitary,
    build_multipartite_spinor,
    build_schmidt_bipartite,
    coherent_spinor,
    epr_state,
    random_micro_state,
)

GRID = wg.AngularGrid(64, 64)


def half(x2):
    return Rational(x2, 2)


@pytest.mark.parametrize(
    "tj1,tm1,tj2,tm2,tJ",
    [(1, 1, 1, -1, 0), (2, 0, 2, 2, 2), (3, 1, 4, -2, 5), (6, -4, 6, 2, 8), (5, 3, 3, -1, 4), (10, 2, 10, -6, 12)],
)
def test_clebsch_gordan_vs_sympy(tj1, tm1, tj2, tm2, tJ):
    tM = tm1 + tm2
    ref = float(CG(half(tj1), half(tm1), half(tj2), half(tm2), half(tJ), half(tM)).doit())
    args = [x / 2 for x in (tj1, tm1, tj2, tm2, tJ, tM)]
    assert wg.clebsch_gordan(*args) == pytest.approx(ref, abs=1e-14)
    assert wg.clebsch_gordan(*args, exact=True) == pytest.approx(ref, abs=1e-15)


def test_clebsch_gordan_random_vs_sympy(rng):
    for _ in range(40):
        tj1, tj2 = (int(x) for x in rng.integers(0, 9, size=2))
        tm1 = int(rng.choice(np.arange(-tj1, tj1 + 1, 2)))
        tm2 = int(rng.choice(np.arange(-tj2, tj2 + 1, 2)))
        tJs = [t for t in range(abs(tj1 - tj2), tj1 + tj2 + 1, 2) if t >= abs(tm1 + tm2)]
        tJ = int(rng.choice(tJs))
        ref = float(CG(half(tj1), half(tm1), half(tj2), half(tm2), half(tJ), half(tm1 + tm2)).doit())
        got = wg.clebsch_gordan(tj1 / 2, tm1 / 2, tj2 / 2, tm2 / 2, tJ / 2, (tm1 + tm2) / 2)
        assert got == pytest.approx(ref, abs=1e-13)


def test_clebsch_gordan_selection_rules():
    assert wg.clebsch_gordan(1, 0, 1, 0, 1, 0) == 0.0  # parity zero
    assert wg.clebsch_gordan(1, 1, 1, 0, 2, 0) == 0.0  # M mismatch
    assert wg.clebsch_gordan(1, 0, 1, 0, 3, 0) == 0.0  # triangle
    with pytest.raises(ValueError):
        wg.clebsch_gordan(0.3, 0, 1, 0, 1, 0)


def test_clebsch_gordan_orthogonality_at_cap():
    # 2j = 40: sum_m <j m; j M-m | L M><j m; j M-m | L' M> = delta_LL'
    j, M = 20.0, 3
    Ls = range(3, 41)
    ms = [m for m in np.arange(-j, j + 1) if abs(M - m) <= j]
    C = np.array([[wg.clebsch_gordan(j, m, j, M - m, L, M) for m in ms] for L in Ls])
    assert np.max(np.abs(C @ C.T - np.eye(len(Ls)))) < 1e-10


@pytest.mark.parametrize("L", [0, 1, 3, 8, 20])
def test_spherical_harmonics_vs_scipy(L, rng):
    theta = rng.uniform(0, math.pi, 30)
    phi = rng.uniform(0, 2 * math.pi, 30)
    table = wg.spherical_harmonic_table(L, theta, phi)
    for M in range(-L, L + 1):
        ref = scipy.special.sph_harm_y(L, M, theta, phi)
        assert np.allclose(wg.spherical_harmonic(L, M, theta, phi), ref, atol=1e-12)
        assert np.allclose(table[L, L + M], ref, atol=1e-12)


def test_grid_integrates_harmonics():
    assert GRID.integrate(np.ones((64, 64))) == pytest.approx(4 * math.pi)
    t, p = GRID.points()
    y = wg.spherical_harmonic(5, 2, t, p).reshape(64, 64)
    assert GRID.integrate(np.abs(y) ** 2) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("N", [1, 2, 5, 10])
def test_kernel_integral_normalization(N, rng):
    # only L = 0 survives the sphere integral: (-1)^N sqrt(4 pi / (N + 1)) tr(rho)
    state = build_multipartite_spinor(random_micro_state((2,), rng), N)
    W = wg.wigner_unipartite(state, GRID)
    assert GRID.integrate(W.values) == pytest.approx((-1) ** N * math.sqrt(4 * math.pi / (N + 1)), rel=1e-10)


def test_kernel_trace_orthogonality():
    # CG completeness over L: int K[a,b] K[c,d]* dOmega = delta_ac delta_bd
    N = 3
    t, p = GRID.points()
    K = wg.kernel(N, t, p).reshape(N + 1, N + 1, 64, 64)
    for (a, b), (c, d) in [((0, 0), (0, 0)), ((0, 1), (0, 1)), ((0, 1), (1, 0)), ((2, 3), (2, 3))]:
        val = GRID.integrate((K[a, b] * np.conj(K[c, d])).real)
        expected = 1.0 if (a, b) == (c, d) else 0.0
        assert val == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("N", [2, 10])
def test_coherent_state_peak_even(N):
    s = wg.wigner_unipartite(coherent_spinor(1.0, 2.0, N), GRID)
    t, p = s.argmax()
    assert abs(t - 1.0) <= np.max(np.diff(GRID.theta))
    assert abs(p - 2.0) <= 2 * math.pi / 64
    assert s.imag_residue < 1e-10


@pytest.mark.parametrize("N", [1, 11])
def test_coherent_state_odd_n_sign(N):
    # literal phase carries (-1)^N: the peak appears as the minimum
    s = wg.wigner_unipartite(coherent_spinor(1.0, 2.0, N), GRID)
    t, p = s.argmin()
    assert abs(t - 1.0) <= np.max(np.diff(GRID.theta))
    assert abs(p - 2.0) <= 2 * math.pi / 64
    assert wg.orientation_sign(N) == -1
    flipped = wg.orientation_sign(N) * s.values
    assert np.unravel_index(np.argmax(flipped), flipped.shape) == np.unravel_index(np.argmin(s.values), s.values.shape)


@pytest.mark.parametrize("t2,p2", [(math.pi / 2, 0.0), (math.pi / 4, math.pi / 2), (2.2, 4.0)])
def test_projected_epr_state(t2, p2):
    N = 10
    proj = wg.project_second_ensemble(epr_state(N), t2, p2)
    assert proj.fidelity(coherent_spinor(t2, -p2, N)) >= 1 - 1e-10


def test_traced_epr_uniform_and_matches_svd():
    N = 8
    rho = wg.traced_rho1(math.pi / 4, N)
    W = wg.wigner_unipartite(rho, GRID).values
    assert np.ptp(W) <= 1e-8
    chi = math.pi / 8
    direct = reduced_state(build_schmidt_bipartite(chi, N)).density_matrix
    assert np.allclose(wg.traced_rho1(chi, N).density_matrix, direct, atol=1e-12)


def test_rotation_covariance():
    N, chi = 6, 0.5
    state = build_schmidt_bipartite(chi, N)
    R = LocalUnitary.rotation(1, [0.3, -0.5, 0.8], 1.1)
    rotated = apply_local_unitary(state, R)
    th = np.linspace(0.1, 3.0, 17)
    ph = np.linspace(0.0, 6.0, 17)
    t, p = wg.inverse_rotated_angles(R.bloch_rotation(), th, ph)
    lhs = wg.bipartite_points(rotated, th, ph, 0.7, 1.3)
    rhs = wg.bipartite_points(state, t, p, 0.7, 1.3)
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_bipartite_integrates_to_reduced():
    # int dOmega_2 W(1, 2) = (-1)^N sqrt(4 pi/(N+1)) W_1[rho_1]
    N = 3
    g = wg.AngularGrid(8, 8)
    state = build_multipartite_spinor(random_micro_state((2, 2), np.random.default_rng(5)), N)
    t1, p1 = np.array([0.4, 1.9]), np.array([0.2, 5.0])
    acc = np.zeros(2, dtype=complex)
    w_phi = 2 * math.pi / g.n_phi
    for a, t2 in enumerate(g.theta):
        for p2 in g.phi:
            acc += g.cos_weights[a] * w_phi * wg.bipartite_points(state, t1, p1, t2, p2)
    w1 = wg.wigner_points(reduced_state(state), t1, p1)
    assert np.allclose(acc, (-1) ** N * math.sqrt(4 * math.pi / (N + 1)) * w1, atol=1e-10)


def test_bipartite_slice_real_for_odd_n():
    s = wg.wigner_bipartite(build_schmidt_bipartite(0.6, 5), (math.pi / 2, 0.0), wg.AngularGrid(16, 16))
    assert s.imag_residue < 1e-10
    assert s.fixed == (math.pi / 2, 0.0)
    assert s.convention_tag == "literal-kernel"


def test_marginal_vs_phi_quadrature():
    N = 6
    state = epr_state(N)
    g = wg.AngularGrid(12, 24)
    m = wg.wigner_marginal_theta(state, g)
    phis = 2 * math.pi * np.arange(24) / 24
    dphi = 2 * math.pi / 24
    for a in (0, 5):
        for b in (3, 11):
            total = 0.0
            for p2 in phis:
                total += np.sum(wg.bipartite_points(state, np.full(24, g.theta[a]), phis, g.theta[b], p2)).real
            assert m.values[a, b] == pytest.approx(total * dphi * dphi, abs=1e-10)


def test_marginal_unipartite_vs_quadrature():
    N = 4
    st = coherent_spinor(0.7, 1.0, N)
    th = np.array([0.3, 1.2])
    phis = 2 * math.pi * np.arange(32) / 32
    direct = [np.sum(wg.wigner_points(st, np.full(32, t), phis)).real * 2 * math.pi / 32 for t in th]
    assert np.allclose(wg.wigner_marginal_unipartite(st, th), direct, atol=1e-12)


def test_exact_cg_table_matches_float():
    assert np.allclose(wg._cg_table(6, True), wg._cg_table(6, False), atol=1e-14)


def test_capacity_and_configuration():
    with pytest.raises(CapacityError):
        wg.kernel(21, [0.1], [0.2])
    with pytest.raises(UnsupportedConfigurationError):
        wg.wigner_bipartite(coherent_spinor(0.1, 0.2, 3), (0.0, 0.0))
    with pytest.raises(ArithmeticError):
        wg._real(np.array([1.0 + 1e-3j]))
    st = wg.wigner_unipartite(ReducedState.diagonal(np.array([0.5, 0.5])), wg.AngularGrid(4, 4))
    assert st.values.shape == (4, 4)
