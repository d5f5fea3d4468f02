"""Acceptance checks shared by the ``verify`` command and the test suite.

Each check compares library results with an independent route (dense Fock
states, brute-force sums, exact arithmetic) and returns a ``CheckResult``.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import closed_forms as cf
from . import entanglement as ent
from . import error_models as em
from . import equivalence as eq
from . import wigner as wg
from .fock import log_factorial
from .observables import SpinOperator, build_h0, covariance_report, expectation
from .states import (
    LocalUnitary,
    apply_local_unitary,
    build_schmidt_bipartite,
    coherent_spinor,
    epr_state,
    normalization_factor,
    random_micro_state,
    schmidt_micro,
)


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    metric: float
    threshold: float
    details: Dict[str, object] = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"criterion {self.criterion:>2} [{status}] {self.name}: "
            f"metric={self.metric:.3e} threshold={self.threshold:.1e} ({self.seconds:.1f}s)"
        )

    def to_json(self) -> dict:
        d = asdict(self)
        d["metric"] = None if not math.isfinite(self.metric) else self.metric
        return d


def _timed(fn: Callable[..., CheckResult]) -> Callable[..., CheckResult]:
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def oracle_chi_grid() -> np.ndarray:
    """25 interior angles of (0, pi/2), pi/4 included."""
    return np.linspace(0, math.pi / 2, 27)[1:-1]


def fine_chi_grid() -> np.ndarray:
    """99 interior angles i pi / 200."""
    return np.arange(1, 100) * math.pi / 200


def _rel(a: float, b: float, scale: float = 1.0) -> float:
    return abs(a - b) / max(abs(b), scale)


@_timed
def check_closed_forms(max_N: int = 12) -> CheckResult:
    """Dense Fock-state moments against the summation and rational forms."""
    worst_sum = worst_closed = worst_literal = 0.0
    for N in range(1, max_N + 1):
        for chi in oracle_chi_grid():
            st = build_schmidt_bipartite(chi, N)
            dense = {
                "sz": expectation(st, SpinOperator("z", 1)),
                "szsz": expectation(st, [SpinOperator("z", 1), SpinOperator("z", 2)]),
                "sxsx": expectation(st, [SpinOperator("x", 1), SpinOperator("x", 2)]),
                "sx2": expectation(st, [SpinOperator("x", 1), SpinOperator("x", 1)]),
            }
            fns = {"sz": cf.exact_sz, "szsz": cf.exact_szsz, "sxsx": cf.exact_sxsx, "sx2": cf.exact_sx2}
            for key, fn in fns.items():
                worst_sum = max(worst_sum, _rel(fn(chi, N, method="sum"), dense[key]))
            log_norm = normalization_factor(schmidt_micro(chi), N)
            worst_sum = max(worst_sum, abs(cf.log_normalization(chi, N) - log_norm) / max(1.0, abs(log_norm)))
            if abs(math.cos(2 * chi)) > 1e-6:
                for key, fn in fns.items():
                    worst_closed = max(worst_closed, _rel(fn(chi, N, method="closed"), dense[key]))
                worst_literal = max(worst_literal, _rel(cf.printed_sxsx_bracket(chi, N), dense["sxsx"]))
    metric = max(worst_sum, worst_closed)
    return CheckResult(
        1,
        "closed forms vs dense oracle",
        metric <= 1e-9,
        metric,
        1e-9,
        {
            "summation_max_rel": worst_sum,
            "rational_max_rel": worst_closed,
            "literal_sxsx_bracket_max_rel": worst_literal,
            "max_N": max_N,
        },
    )


@_timed
def check_eigenstate(Ns=(2, 5, 10, 20)) -> CheckResult:
    worst = 0.0
    for N in Ns:
        for chi in np.linspace(0, math.pi / 2, 9):
            v = build_schmidt_bipartite(chi, N).vector
            H = build_h0(chi, N)
            worst = max(worst, float(np.linalg.norm(H @ v + N * (N + 2) * v) / np.linalg.norm(v)))
    return CheckResult(2, "H0 eigenvalue -N(N+2)", worst <= 1e-9, worst, 1e-9, {"N": list(Ns)})


@_timed
def check_correlations(max_N: int = 50) -> CheckResult:
    worst_dense = worst_closed = 0.0
    for N in range(1, max_N + 1):
        for chi in fine_chi_grid():
            s2 = math.sin(2 * chi)
            V = covariance_report(build_schmidt_bipartite(chi, N)).V
            cx = V[0, 3] / math.sqrt(V[0, 0] * V[3, 3])
            cy = V[1, 4] / math.sqrt(V[1, 1] * V[4, 4])
            cz = V[2, 5] / math.sqrt(V[2, 2] * V[5, 5])
            worst_dense = max(worst_dense, abs(cx - s2), abs(cy + s2), abs(cz - 1))
            x, y, z = cf.exact_correlations(chi, N)
            worst_closed = max(worst_closed, abs(x - s2), abs(y + s2), abs(z - 1))
    metric = max(worst_dense, worst_closed)
    return CheckResult(
        3, "exact correlations", metric <= 1e-10, metric, 1e-10,
        {"dense": worst_dense, "closed_form": worst_closed, "max_N": max_N},
    )


@_timed
def check_epr_variances(Ns=(1, 10, 50)) -> CheckResult:
    worst = 0.0
    for N in Ns:
        worst = max(worst, max(abs(v) for v in ent.epr_variances(epr_state(N))))
    return CheckResult(4, "EPR variances vanish", worst <= 1e-9, worst, 1e-9, {"N": list(Ns)})


@_timed
def check_entanglement(N: int = 50) -> CheckResult:
    q = math.pi / 4
    entropy_err = max(
        abs(ent.schmidt_entropy(q, N) - math.log2(N + 1)),
        abs(ent.von_neumann_entropy(epr_state(N)) - math.log2(N + 1)),
        abs(ent.scs_entropy(q, N) - N),
    )
    negative = [
        chi for chi in fine_chi_grid()
        if 0.02 < chi < q - 0.02 or q + 0.02 < chi < math.pi / 2 - 0.02
    ]
    ppt_max = max(ent.exact_ppt_min_eig(chi, N) for chi in negative)
    ppt_quarter = ent.exact_ppt_min_eig(q, N)
    ht_err = max(abs(ent.exact_hoffman_takeuchi(q, N) + 4 * N), abs(ent.scs_hoffman_takeuchi(q, N) + 4 * N))
    passed = entropy_err <= 1e-9 and ppt_max < 0 and abs(ppt_quarter) <= 1e-6 and ht_err <= 1e-9
    return CheckResult(
        5, "entropy, PPT and HT witness", passed, max(entropy_err, ht_err), 1e-9,
        {"entropy_err": entropy_err, "ppt_max_on_grid": ppt_max, "ppt_at_pi4": ppt_quarter, "ht_err": ht_err},
    )


@_timed
def check_limiting_variances(Ns=(2, 10, 50)) -> CheckResult:
    worst = 0.0
    for N in Ns:
        target = cf.limiting_values(N).var_limit
        V = covariance_report(epr_state(N)).V
        Vc = cf.exact_covariance_matrix(math.pi / 4, N)
        for k in (0, 1, 2):
            worst = max(worst, _rel(V[k, k], target), _rel(Vc[k, k], target))
    return CheckResult(6, "variances N(N+2)/3 at pi/4", worst <= 1e-9, worst, 1e-9, {"N": list(Ns)})


@_timed
def check_normalization(max_N: int = 50) -> CheckResult:
    worst = 0.0
    for N in range(1, max_N + 1):
        target = 2 * log_factorial(N) + math.log(N + 1) - N * math.log(2)
        worst = max(
            worst,
            abs(cf.log_normalization(math.pi / 4, N) - target),
            abs(normalization_factor(schmidt_micro(math.pi / 4), N) - target),
        )
    return CheckResult(7, "ln N_Psi at pi/4", worst <= 1e-10, worst, 1e-10, {"max_N": max_N})


@_timed
def check_wigner(N: int = 10, n_grid: int = 64, seed: int = 0) -> CheckResult:
    grid = wg.AngularGrid(n_grid, n_grid)
    theta0, phi0 = 1.0, 2.0
    peak = wg.wigner_unipartite(coherent_spinor(theta0, phi0, N), grid).argmax()
    dtheta = float(np.max(np.diff(grid.theta)))
    dphi = 2 * math.pi / n_grid
    dp = abs((peak[1] - phi0 + math.pi) % (2 * math.pi) - math.pi)
    argmax_ok = abs(peak[0] - theta0) <= dtheta and dp <= dphi

    epr = epr_state(N)
    fid = min(
        wg.project_second_ensemble(epr, t, p).fidelity(coherent_spinor(t, -p, N))
        for t, p in ((math.pi / 2, 0.0), (math.pi / 4, math.pi / 2), (0.0, 1.0), (2.0, 4.0))
    )
    traced = wg.wigner_unipartite(wg.traced_rho1(math.pi / 4, N), grid).values
    spread = float(np.ptp(traced))

    rng = np.random.default_rng(seed)
    th, ph = rng.uniform(0, math.pi, 40), rng.uniform(0, 2 * math.pi, 40)
    state = build_schmidt_bipartite(0.5, N)
    rot_err = 0.0
    for m, axis, angle in ((1, [0.3, -0.5, 0.8], 1.1), (2, [0.0, 1.0, 0.0], 0.7)):
        R = LocalUnitary.rotation(m, axis, angle)
        rotated = apply_local_unitary(state, R)
        O = R.bloch_rotation()
        t2, p2 = 0.7, 1.3
        if m == 1:
            t, p = wg.inverse_rotated_angles(O, th, ph)
            lhs = wg.bipartite_points(rotated, th, ph, t2, p2)
            rhs = wg.bipartite_points(state, t, p, t2, p2)
        else:
            t, p = wg.inverse_rotated_angles(O, np.array([t2]), np.array([p2]))
            lhs = wg.bipartite_points(rotated, th, ph, t2, p2)
            rhs = wg.bipartite_points(state, th, ph, float(t[0]), float(p[0]))
        rot_err = max(rot_err, float(np.max(np.abs(lhs - rhs))))
    passed = argmax_ok and fid >= 1 - 1e-10 and spread <= 1e-8 and rot_err <= 1e-6
    return CheckResult(
        8, "Wigner properties", passed, rot_err, 1e-6,
        {"argmax": peak, "target": (theta0, phi0), "projection_fidelity": fid,
         "traced_spread": spread, "rotation_err": rot_err, "N": N},
    )


@_timed
def check_error_channels(n_max: int = 10, seed: int = em.DEFAULT_SEED, samples: int = 100_000) -> CheckResult:
    completeness = 0.0
    conj = 0.0
    for gamma in (0.3, 0.8, 1.0):
        ch = em.LossChannel(gamma)
        completeness = max(completeness, ch.completeness_error(n_max))
        for axis in "xyzN":
            conj = max(conj, abs(em.loss_conjugate_spin(ch, axis, n_max) - gamma))
    for kappa in (0.0, 0.5, 2.0):
        ch = em.DephasingChannel(kappa)
        completeness = max(completeness, ch.completeness_error(n_max))
        for axis in "xyz":
            target = 1.0 if axis == "z" else math.exp(-kappa / 2)
            conj = max(conj, abs(em.dephasing_conjugate_spin(ch, axis, n_max) - target))

    eps_grid = 0.5 * np.arange(1, 51) / 50
    monotone = True
    ordering = True
    m1 = np.array([[em.logical_error_m1(e, N)[0] for e in eps_grid] for N in range(10, 51)])
    m2 = np.array([[em.logical_error_m2(e, N)[0] for e in eps_grid] for N in range(10, 51)])
    monotone &= bool(np.all(np.diff(m1, axis=1) >= 0))
    # ties count as errors, so the tail only decreases within a parity class of N
    monotone &= bool(np.all(np.diff(m1[0::2, :-1], axis=0) <= 0) and np.all(np.diff(m1[1::2, :-1], axis=0) <= 0))
    ordering = bool(np.all((m2 <= m1)[:, eps_grid <= 0.4]))

    conf = em.sigma_confidence(3)
    mc_cases = [(0.2, 21), (0.5, 21)] + [(float(e), 50) for e in eps_grid]
    mc_miss = []
    for e, N in mc_cases:
        r = em.monte_carlo_majority(e, N, samples, seed=seed, confidence=conf)
        exact = em.logical_error_m1(e, N)[0]
        if not r.ci_low <= exact <= r.ci_high:
            mc_miss.append({"epsilon": e, "N": N, "errors": r.errors, "expected": exact * samples})
    passed = completeness <= 1e-9 and conj <= 1e-9 and monotone and ordering and not mc_miss
    return CheckResult(
        9, "error channels and readout", passed, max(completeness, conj), 1e-9,
        {"completeness": completeness, "conjugation": conj, "monotone": monotone,
         "m2_le_m1": ordering, "mc_outside_3sigma": mc_miss, "seed": seed},
    )


@_timed
def check_equivalence(seed: int = 0, draws: int = 50) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_uni = 0.0
    for _ in range(draws):
        L = int(rng.integers(2, 4))
        N = int(rng.integers(1, 7))
        worst_uni = max(worst_uni, 1 - eq.unipartite_equivalence_check(random_micro_state((L,), rng), N))
    worst_prod = 0.0
    for _ in range(20):
        p = np.kron(random_micro_state((2,), rng), random_micro_state((2,), rng))
        worst_prod = max(worst_prod, eq.bipartite_inequivalence_witness(*p))
    min_ent = math.inf
    found = 0
    while found < 20:
        q = random_micro_state((4,), rng)
        if abs(q[0] * q[3] - q[1] * q[2]) > 0.1:
            min_ent = min(min_ent, eq.bipartite_inequivalence_witness(*q))
            found += 1
    passed = worst_uni <= 1e-10 and worst_prod <= 1e-10 and min_ent > 1e-4
    return CheckResult(
        10, "equivalence suite", passed, max(worst_uni, worst_prod), 1e-10,
        {"unipartite_deficit": worst_uni, "product_witness": worst_prod, "entangled_min_witness": min_ent},
    )


ALL_CHECKS = {
    1: check_closed_forms,
    2: check_eigenstate,
    3: check_correlations,
    4: check_epr_variances,
    5: check_entanglement,
    6: check_limiting_variances,
    7: check_normalization,
    8: check_wigner,
    9: check_error_channels,
    10: check_equivalence,
}


def run_checks(
    quick: bool = False, seed: Optional[int] = None, only: Optional[Sequence[int]] = None
) -> List[CheckResult]:
    """Criteria 1-10; ``quick`` restricts sizes to N <= 6 where a size applies."""
    kw: Dict[int, dict] = {}
    if quick:
        kw = {
            1: {"max_N": 6},
            2: {"Ns": (2, 5)},
            3: {"max_N": 6},
            4: {"Ns": (1, 6)},
            5: {"N": 6},
            6: {"Ns": (2, 6)},
            7: {"max_N": 6},
            8: {"N": 6, "n_grid": 32},
            9: {"n_max": 6},
            10: {"draws": 10},
        }
    if seed is not None:
        kw.setdefault(9, {})["seed"] = seed
    return [fn(**kw.get(k, {})) for k, fn in ALL_CHECKS.items() if only is None or k in only]
