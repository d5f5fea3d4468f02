"""Command-line entry point: figure data products, verification and state dumps."""

from __future__ import annotations

import argparse
import filecmp
import json
import math
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from . import closed_forms as cf
from . import entanglement as ent
from . import error_models as em
from . import verification as vf
from . import wigner as wg
from .exceptions import CapacityError
from .io import write_table
from .states import build_schmidt_bipartite, state_to_json
from .verification import CheckResult

COMMANDS = ("fig2", "fig4", "fig5", "fig6", "verify", "dump-state")
DEFAULT_N = {"fig2": 50, "fig4": 10, "fig5": 50, "fig6": 50, "verify": 12, "dump-state": 10}
SUITES = {
    "all": tuple(range(1, 12)),
    "closed-forms": (1, 2, 3, 6, 7),
    "entanglement": (4, 5),
    "wigner": (8,),
    "error-models": (9,),
    "equivalence": (10,),
    "determinism": (11,),
}
SINGULAR_COS = 1e-12

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_CAPACITY = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    N: Optional[int] = None
    chi_points: int = 199
    chi: Optional[float] = None
    grid: int = 64
    format: str = "csv"
    out: str = "out"
    seed: int = em.DEFAULT_SEED
    quick: bool = False
    extended_precision: bool = False
    dump_state: bool = False
    workers: int = 1
    samples: int = 100_000
    eps_points: int = 50
    suite: str = "all"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.N is None:
            self.N = DEFAULT_N[self.command]
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.chi_points < 2 or self.grid < 2 or self.eps_points < 1 or self.workers < 1:
            raise ValueError("grid sizes and worker count must be positive")
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown format {self.format!r}")
        if self.chi is not None and not 0 <= self.chi <= math.pi / 2:
            raise ValueError("chi must lie in [0, pi/2]")
        if self.suite not in SUITES:
            raise ValueError(f"unknown suite {self.suite!r}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        doc = json.loads(text)
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in doc.items() if k in names})

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def chi_grid(self) -> np.ndarray:
        return np.linspace(0, math.pi / 2, self.chi_points)

    def metadata(self, **extra) -> Dict[str, object]:
        meta = {"command": self.command, "N": self.N, "seed": self.seed,
                "convention_tag": wg.CONVENTION_TAG}
        if self.chi is None:
            meta["chi_grid"] = f"linspace(0, pi/2, {self.chi_points})"
        else:
            meta["chi"] = self.chi
        meta.update(extra)
        return meta


def _nan_if_singular(chi: float, fn: Callable[[], float]) -> float:
    return math.nan if abs(math.cos(2 * chi)) < SINGULAR_COS else fn()


def _chi_values(cfg: RunConfig) -> np.ndarray:
    return np.array([cfg.chi]) if cfg.chi is not None else cfg.chi_grid()


def _maybe_dump(cfg: RunConfig, chi: float) -> List[Path]:
    if not cfg.dump_state:
        return []
    return [_write_state(cfg, chi)]


def _write_state(cfg: RunConfig, chi: float) -> Path:
    doc = {"chi": chi, "state": state_to_json(build_schmidt_bipartite(chi, cfg.N)),
           "artifact_version": __version__}
    path = cfg.out_dir / f"state_N{cfg.N}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    return path


FIG2_COLUMNS = [
    "chi",
    "sz_over_N", "sz_over_N_approx", "sz_over_N_scs",
    "var_x", "var_x_approx", "var_x_scs",
    "var_z", "var_z_approx", "var_z_scs",
    "cov_xx", "cov_xx_approx", "cov_xx_scs",
    "cov_zz", "cov_zz_approx", "cov_zz_scs",
]
FIG2F_COLUMNS = ["chi", "var_x", "var_y", "var_z", "cov_xx", "cov_yy", "cov_zz", "limit"]


def run_fig2(cfg: RunConfig) -> List[Path]:
    N = cfg.N
    rows, rows_f = [], []
    limit = cf.limiting_values(N).var_limit
    for chi in _chi_values(cfg):
        chi = float(chi)
        p = cf.BipartiteParams(chi, N)
        V = cf.exact_covariance_matrix(p)
        S = cf.scs_covariance_matrix(p)
        sz = cf.exact_sz(p)
        rows.append([
            chi,
            sz / N, _nan_if_singular(chi, lambda: cf.approx_sz(p) / N), math.cos(2 * chi),
            V[0, 0], _nan_if_singular(chi, lambda: cf.approx_sx2(p)), S[0, 0],
            V[2, 2], _nan_if_singular(chi, lambda: cf.approx_var_sz(p)), S[2, 2],
            V[0, 3], _nan_if_singular(chi, lambda: cf.approx_sxsx(p)), S[0, 3],
            V[2, 5], _nan_if_singular(chi, lambda: cf.approx_var_sz(p)), S[2, 5],
        ])
        rows_f.append([chi, V[0, 0], V[1, 1], V[2, 2], V[0, 3], V[1, 4], V[2, 5], limit])
    meta = cfg.metadata(frame="schmidt")
    paths = [
        write_table(cfg.out_dir / "fig2", FIG2_COLUMNS, rows, meta, cfg.format),
        write_table(cfg.out_dir / "fig2f", FIG2F_COLUMNS, rows_f, {**meta, "limit": limit}, cfg.format),
    ]
    return paths + _maybe_dump(cfg, cfg.chi if cfg.chi is not None else math.pi / 4)


FIG5_COLUMNS = ["chi", "entropy_spinor_norm", "entropy_scs_norm", "ppt_min_eig_spinor",
                "ppt_min_eig_scs", "ht_spinor", "ht_scs"]


def run_fig5(cfg: RunConfig) -> List[Path]:
    N = cfg.N
    rows = []
    for chi in _chi_values(cfg):
        chi = float(chi)
        rows.append([
            chi,
            ent.schmidt_entropy(chi, N) / math.log2(N + 1),
            ent.scs_entropy(chi, N) / N,
            ent.exact_ppt_min_eig(chi, N),
            ent.scs_ppt_min_eig(chi, N),
            ent.exact_hoffman_takeuchi(chi, N),
            ent.scs_hoffman_takeuchi(chi, N),
        ])
    meta = cfg.metadata(entropy_max_spinor=math.log2(N + 1), entropy_max_scs=N)
    path = write_table(cfg.out_dir / "fig5", FIG5_COLUMNS, rows, meta, cfg.format)
    return [path] + _maybe_dump(cfg, cfg.chi if cfg.chi is not None else math.pi / 4)


FIG4_FIXED = {"a": (math.pi / 2, 0.0), "c": (math.pi / 4, math.pi / 2)}
FIG4_PROJECTED = {"b": (math.pi / 2, 0.0), "d": (math.pi / 4, math.pi / 2)}
FIG4_TRACED_CHI = math.pi / 8


def _slice_rows(s: wg.WignerSlice) -> List[list]:
    return [[float(t), float(p), float(s.values[a, b])]
            for a, t in enumerate(s.theta) for b, p in enumerate(s.phi)]


def run_fig4(cfg: RunConfig) -> List[Path]:
    N = cfg.N
    wg._check_cap(N, cfg.extended_precision)
    chi = cfg.chi if cfg.chi is not None else math.pi / 4
    grid = wg.AngularGrid(cfg.grid, cfg.grid)
    xp = cfg.extended_precision
    state = build_schmidt_bipartite(chi, N)

    def panel(name: str):
        if name in FIG4_FIXED:
            s = wg.wigner_bipartite(state, FIG4_FIXED[name], grid, xp)
            return ["theta1", "phi1", "W"], _slice_rows(s), {"theta2": s.fixed[0], "phi2": s.fixed[1],
                                                            "imag_residue": s.imag_residue}
        if name in FIG4_PROJECTED:
            t2, p2 = FIG4_PROJECTED[name]
            s = wg.wigner_unipartite(wg.project_second_ensemble(state, t2, p2), grid, xp)
            return ["theta1", "phi1", "W"], _slice_rows(s), {"theta2": t2, "phi2": p2, "projected": True,
                                                            "imag_residue": s.imag_residue}
        if name == "e":
            m = wg.wigner_marginal_theta(state, grid, xp)
            rows = [[float(t1), float(t2), float(m.values[a, b])]
                    for a, t1 in enumerate(m.theta) for b, t2 in enumerate(m.theta)]
            return ["theta1", "theta2", "W"], rows, {"marginal": "phi1,phi2"}
        s = wg.wigner_unipartite(wg.traced_rho1(FIG4_TRACED_CHI, N), grid, xp)
        return ["theta1", "phi1", "W"], _slice_rows(s), {"traced_chi": FIG4_TRACED_CHI,
                                                        "imag_residue": s.imag_residue}

    names = ["a", "b", "c", "d", "e", "f"]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        results = list(pool.map(panel, names))  # map preserves order
    paths = []
    for name, (cols, rows, extra) in zip(names, results):
        meta = cfg.metadata(panel=name, grid=f"{cfg.grid}x{cfg.grid}", **extra)
        meta.pop("chi_grid", None)
        meta["chi"] = FIG4_TRACED_CHI if name == "f" else chi
        paths.append(write_table(cfg.out_dir / f"fig4{name}", cols, rows, meta, cfg.format))
    return paths + _maybe_dump(cfg, chi)


FIG6_COLUMNS = ["epsilon", "eps_L_m1_exact", "eps_L_m1_approx", "eps_L_m2_exact", "eps_L_m2_approx",
                "eps_L_mc", "mc_ci_low", "mc_ci_high"]


def run_fig6(cfg: RunConfig) -> List[Path]:
    N = cfg.N
    rows = []
    for i in range(1, cfg.eps_points + 1):
        eps = 0.5 * i / cfg.eps_points
        m1, m1a = em.logical_error_m1(eps, N)
        m2, m2a = em.logical_error_m2(eps, N)
        mc = em.monte_carlo_majority(eps, N, cfg.samples, seed=cfg.seed, workers=cfg.workers)
        rows.append([eps, m1, m1a, m2, m2a, mc.estimate, mc.ci_low, mc.ci_high])
    meta = cfg.metadata(samples=cfg.samples, mc_confidence=0.95, tie_rule="error")
    meta.pop("chi_grid", None)
    return [write_table(cfg.out_dir / "fig6", FIG6_COLUMNS, rows, meta, cfg.format)]


FIGURES: Dict[str, Callable[[RunConfig], List[Path]]] = {
    "fig2": run_fig2, "fig4": run_fig4, "fig5": run_fig5, "fig6": run_fig6,
}


def check_determinism(quick: bool = True, seed: int = em.DEFAULT_SEED) -> CheckResult:
    """Run every figure command twice into fresh directories and compare bytes."""
    import time

    t0 = time.perf_counter()
    small = {"fig2": {"N": 8, "chi_points": 21}, "fig4": {"N": 4, "grid": 12},
             "fig5": {"N": 8, "chi_points": 21}, "fig6": {"N": 11, "eps_points": 5, "samples": 2000}}
    mismatched = []
    compared = 0
    with tempfile.TemporaryDirectory() as tmp:
        for cmd, fn in FIGURES.items():
            extra = small[cmd] if quick else {}
            outs = []
            for rep in range(2):
                cfg = RunConfig(cmd, out=str(Path(tmp) / f"{cmd}_{rep}"), seed=seed, **extra)
                outs.append(fn(cfg))
            for a, b in zip(*outs):
                compared += 1
                if not filecmp.cmp(a, b, shallow=False):
                    mismatched.append(a.name)
    res = CheckResult(11, "figure outputs byte-identical across runs", not mismatched,
                      float(len(mismatched)), 0.0, {"files_compared": compared, "mismatched": mismatched,
                                                    "quick": quick})
    res.seconds = time.perf_counter() - t0
    return res


def run_verify(cfg: RunConfig) -> List[CheckResult]:
    wanted = SUITES[cfg.suite]
    results = [r for r in vf.run_checks(quick=cfg.quick, seed=cfg.seed, only=wanted)]
    if 11 in wanted:
        results.append(check_determinism(quick=cfg.quick, seed=cfg.seed))
    return results


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", dest="N", type=int, help="ensemble size (command-specific default)")
    common.add_argument("--chi-points", type=int, default=199)
    common.add_argument("--chi", type=float, help="single Schmidt angle instead of a sweep")
    common.add_argument("--grid", type=int, default=64, help="Wigner grid size per angle")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default="out")
    common.add_argument("--seed", type=lambda s: int(s, 0), default=em.DEFAULT_SEED)
    common.add_argument("--quick", action="store_true")
    common.add_argument("--extended-precision", action="store_true")
    common.add_argument("--dump-state", action="store_true")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--samples", type=int, default=100_000)
    common.add_argument("--eps-points", type=int, default=50)
    parser = argparse.ArgumentParser(prog="spinorstates", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        p = sub.add_parser(cmd, parents=[common])
        if cmd == "verify":
            p.add_argument("suite", nargs="?", default="all", choices=sorted(SUITES))
    return parser


def config_from_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    return RunConfig(**ns)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = config_from_args(argv)
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if cfg.command == "verify":
            results = run_verify(cfg)
            for r in results:
                print(r.line())
            report = {"config": json.loads(cfg.to_json()), "artifact_version": __version__,
                      "results": [r.to_json() for r in results],
                      "passed": all(r.passed for r in results)}
            cfg.out_dir.mkdir(parents=True, exist_ok=True)
            path = cfg.out_dir / "verify.json"
            path.write_text(json.dumps(report, sort_keys=True, indent=1, default=str) + "\n")
            print(path)
            return EXIT_OK if report["passed"] else EXIT_VERIFY
        if cfg.command == "dump-state":
            paths = [_write_state(cfg, cfg.chi if cfg.chi is not None else math.pi / 4)]
        else:
            paths = FIGURES[cfg.command](cfg)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for p in paths:
        print(p)
    return EXIT_OK
