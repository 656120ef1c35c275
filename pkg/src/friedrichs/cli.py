"""Command-line batch front end: ``friedrichs {scan,threshold,classify,verify,oracle}``."""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import RunConfig, load_config
from .dispersion import check_cnd
from .errors import ConfigError, FriedrichsError
from .fredholm import integrator, mu0
from .landscape import (
    LANDSCAPE_COLUMNS,
    fit_umin_expansion,
    hessian_data,
    landscape_rows,
    lattice_directions,
    validated_radius,
)
from .oracle import discretize, lowest_eigenvalue
from .quadrature import SCAN_RULE, LocalRule
from .spectrum import EIGEN_COLUMNS, eigen_row, find_eigenvalue
from .tables import fmt, write_csv
from .threshold import (
    EIGENVALUE,
    RESONANCE,
    cell_centred_grid,
    classify_threshold,
    fit_threshold_expansion,
    threshold_inequality_report,
    verify_assumption_lambda,
)

__all__ = ["main", "run_scan", "run_threshold_report", "run_classify", "run_verify", "run_oracle", "ORACLE_COLUMNS"]

log = logging.getLogger(__name__)

ORACLE_COLUMNS = ("p1", "p2", "p3", "mu", "n", "exists", "e_spectrum", "e_oracle", "difference", "plain_regime")


class Run:
    """Resolved couplings and output naming shared by the subcommands."""

    def __init__(self, cfg: RunConfig, workers: int = 1, seed: int = 0):
        self.cfg = cfg
        self.workers = max(1, int(workers))
        self.seed = int(seed)
        self.mu0 = mu0(cfg.model(1.0), cfg.grid) if cfg.needs_mu0 else None
        self.mu = cfg.mu.resolve(self.mu0)
        self.ladder = tuple(t.resolve(self.mu0) for t in cfg.ladder)
        self.spec = cfg.model(self.mu)

    def header(self, command: str) -> list:
        lines = [f"command = {command}", *self.cfg.render()]
        if self.mu0 is not None:
            lines.append(f"resolved.mu0 = {fmt(self.mu0)}")
        lines.append(f"resolved.mu = {fmt(self.mu)}")
        lines.append("resolved.mu_ladder = " + ", ".join(fmt(m) for m in self.ladder))
        return lines

    def path(self, name: str) -> Path:
        return Path(self.cfg.directory) / f"{self.cfg.prefix}_{name}"

    def p_points(self) -> np.ndarray:
        return cell_centred_grid(self.cfg.p_grid)

    def map(self, func, items) -> list:
        items = list(items)
        if self.workers == 1 or len(items) <= 1:
            return [func(x) for x in items]
        chunk = max(1, len(items) // (4 * self.workers))
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(func, items, chunksize=chunk))


def _write_report(path: Path, header: Sequence[str], items: Sequence[tuple]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = "".join(f"# {line}\n" for line in header)
    text += "".join(f"{k} = {fmt(v) if isinstance(v, float) else v}\n" for k, v in items)
    path.write_text(text)
    return path


def _scan_task(p, spec, grid, mus):
    rows = [eigen_row(find_eigenvalue(spec, p, grid, mu=mu)) for mu in mus]
    return rows, landscape_rows(spec, [p])[0]


def run_scan(cfg: RunConfig, workers: int = 1, seed: int = 0) -> list:
    """Eigenvalue and band-edge tables over the p-grid for every coupling of the ladder."""
    run = Run(cfg, workers, seed)
    out = run.map(partial(_scan_task, spec=run.spec, grid=cfg.grid, mus=run.ladder), run.p_points())
    header = run.header("scan")
    eig = [row for rows, _ in out for row in rows]
    return [
        write_csv(run.path("scan.csv"), EIGEN_COLUMNS, eig, header),
        write_csv(run.path("bands.csv"), LANDSCAPE_COLUMNS, [b for _, b in out], header),
    ]


def _oracle_task(p, spec, grid, mus):
    dm = discretize(spec, p, grid.n)
    # Roots within the gap cutoff use the threshold-corrected integral, which the discrete model lacks.
    cutoff = integrator(spec, p, grid, LocalRule()).gap_cutoff
    rows = []
    for mu in mus:
        r = find_eigenvalue(spec, p, grid, mu=mu)
        e_or = lowest_eigenvalue(dm, mu)
        e_sp = r.e if r.exists else float("nan")
        plain = bool(r.exists and r.band[0] - e_sp > cutoff)
        rows.append((*r.p, mu, grid.n, r.exists, e_sp, e_or, e_sp - e_or if r.exists else float("nan"), plain))
    return rows


def run_oracle(cfg: RunConfig, workers: int = 1, seed: int = 0) -> list:
    """Row-by-row comparison of the determinant root with the discrete secular root."""
    run = Run(cfg, workers, seed)
    out = run.map(partial(_oracle_task, spec=run.spec, grid=cfg.grid, mus=run.ladder), run.p_points())
    rows = [row for chunk in out for row in chunk]
    return [write_csv(run.path("oracle.csv"), ORACLE_COLUMNS, rows, run.header("oracle"))]


def _class_items(tc) -> list:
    items = [
        ("kind", tc.kind),
        ("phi_at_zero", float(tc.phi_at_zero)),
        ("det_at_threshold", float(tc.det_at_threshold)),
        ("margin", float(tc.margin)),
    ]
    for n, l1, l2 in tc.norms:
        items += [(f"norm.l1.n{n}", float(l1)), (f"norm.l2.n{n}", float(l2))]
    items += [("norm.l1_change", float(tc.l1_change)), ("norm.l2_growth", float(tc.l2_growth)),
              ("norm.l2_diverges", str(tc.l2_diverges).lower()), ("norm.l2_stable", str(tc.l2_stable).lower())]
    return items


def run_classify(cfg: RunConfig, workers: int = 1, seed: int = 0) -> list:
    run = Run(cfg, workers, seed)
    tc = classify_threshold(run.spec, cfg.grid)
    return [_write_report(run.path("classify.txt"), run.header("classify"), _class_items(tc))]


def run_threshold_report(cfg: RunConfig, workers: int = 1, seed: int = 0) -> list:
    """Classification, square-root expansion fit, inequality constants and the Lambda checks."""
    run = Run(cfg, workers, seed)
    spec, grid = run.spec, cfg.grid
    header = run.header("threshold")
    tc = classify_threshold(spec, grid)
    items = _class_items(tc)

    fit = fit_threshold_expansion(spec, grid=grid)
    items += [("expansion.a0", fit.a0), ("expansion.a1", fit.a1), ("expansion.a2", fit.a2),
              ("expansion.a1_radial_oracle", fit.a1_oracle)]
    items += [(f"expansion.candidate[{k}]", float(v)) for k, v in fit.a1_theory_candidates.items()]
    items += [("expansion.matches", ", ".join(fit.matches) or "none"),
              ("expansion.residual_exponent", fit.residual_exponent),
              ("expansion.p_residual_scale", fit.p_residual_scale)]
    files = [write_csv(run.path("expansion.csv"), ("w", "delta"), zip(fit.w, fit.delta), header)]

    if tc.kind in (RESONANCE, EIGENVALUE):
        ineq = threshold_inequality_report(spec, cfg.delta, run.p_points(), tc.kind, grid=grid)
        if tc.kind == RESONANCE:
            items += [("inequality.c1", ineq.c1), ("inequality.c2", ineq.c2), ("inequality.band_ratio", ineq.band_ratio),
                      ("inequality.complement_inf", ineq.complement_inf)]
        else:
            items += [("inequality.c", ineq.c)]
        items += [("inequality.delta", ineq.delta), ("inequality.passed", str(ineq.passed).lower())]
        dirs = lattice_directions()
        rows = [(i, *dirs[i], r, ineq.ratios[i, j]) for i in range(len(dirs)) for j, r in enumerate(ineq.radii)]
        files.append(write_csv(run.path("inequality.csv"), ("direction", "d1", "d2", "d3", "radius", "ratio"), rows, header))
    else:
        items.append(("inequality", "not applicable"))

    rep = verify_assumption_lambda(spec, run.p_points(), cfg.delta, grid, SCAN_RULE)
    items += _assumption_items(rep)
    files.insert(0, _write_report(run.path("threshold.txt"), header, items))
    return files


def _assumption_items(rep) -> list:
    return [
        ("assumption.i.passed", str(rep.passed_i).lower()),
        ("assumption.i.min_margin", float(rep.min_margin_i)),
        ("assumption.i.worst_p", " ".join(fmt(v) for v in rep.worst_p_i) if rep.worst_p_i else "none"),
        ("assumption.ii.passed", str(rep.passed_ii).lower()),
        ("assumption.ii.c_quadratic", float(rep.c_quadratic)),
        ("assumption.ii.c_dispersion", float(rep.c_dispersion)),
        ("assumption.delta", float(rep.delta)),
    ]


def run_verify(cfg: RunConfig, workers: int = 1, seed: int = 0) -> list:
    """Structural checks: CND coefficients, Hessian factorisation, u_min law, Lambda extremality."""
    run = Run(cfg, workers, seed)
    spec = run.spec
    cnd = check_cnd(cfg.dispersion, seed=run.seed)
    items = [("cnd.passed", str(cnd.passed).lower()),
             ("cnd.violating_site", " ".join(map(str, cnd.violating_site)) if cnd.violating_site else "none"),
             ("cnd.worst_matrix_eigenvalue", float(cnd.worst_matrix_eigenvalue))]
    try:
        hd = hessian_data(spec)
        items += [("hessian.l1", hd.l1), ("hessian.l", hd.l), ("hessian.l2", hd.l2), ("hessian.m", float(hd.m)),
                  ("hessian.U", " ".join(fmt(v) for v in hd.U.ravel()))]
        ex = fit_umin_expansion(spec)
        items += [("umin.coefficient", ex.coefficient), ("umin.residual_exponent", ex.residual_exponent),
                  ("umin.Q", " ".join(fmt(v) for v in ex.Q.ravel()))]
        items += [(f"umin.candidate[{k}]", float(v)) for k, v in ex.coefficient_candidates.items()]
        items += [("umin.matches", ", ".join(ex.matches) or "none"), ("q0.slope", ex.slope_scalar)]
        items += [(f"q0.candidate[{k}]", float(v)) for k, v in ex.slope_candidates.items()]
        items += [("q0.matches", ", ".join(ex.slope_matches) or "none")]
    except FriedrichsError as exc:
        items.append(("hessian.error", f"{type(exc).__name__}: {exc}"))
    items.append(("validated_radius", validated_radius(spec, seed=run.seed)))
    rep = verify_assumption_lambda(spec, run.p_points(), cfg.delta, cfg.grid, SCAN_RULE)
    items += _assumption_items(rep)
    return [_write_report(run.path("verify.txt"), run.header("verify"), items)]


COMMANDS = {
    "scan": run_scan,
    "threshold": run_threshold_report,
    "classify": run_classify,
    "verify": run_verify,
    "oracle": run_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="friedrichs", description="Spectral scans for rank-one Friedrichs models on the 3-torus.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="path to the run configuration")
    parser.add_argument("--out", default=None, help="output directory (overrides output.directory)")
    parser.add_argument("--workers", type=int, default=1, help="worker processes for p-sweeps")
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _error_line(exc: Exception) -> str:
    parts = [f"error: type={type(exc).__name__}"]
    if isinstance(exc, ConfigError):
        if exc.line is not None:
            parts.append(f"line={exc.line}")
        if exc.key is not None:
            parts.append(f"key={exc.key}")
    parts.append(f"message={str(exc)!r}")
    return " ".join(parts)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        print("error: type=ValueError message='--workers must be >= 1'", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config).with_output(args.out)
    except (ConfigError, OSError) as exc:
        print(_error_line(exc), file=sys.stderr)
        return 2
    try:
        files = COMMANDS[args.command](cfg, workers=args.workers, seed=args.seed)
    except (FriedrichsError, ValueError, ArithmeticError) as exc:
        print(_error_line(exc), file=sys.stderr)
        return 1
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
