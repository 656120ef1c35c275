"""Threshold behaviour at the band bottom: classification, the square-root expansion of the
determinant, and the inequalities it implies."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .dispersion import eval_dispersion
from .fredholm import fredholm_det, integrator, lambda_fn
from .landscape import hessian_data, lattice_directions, minimize_q
from .model import ModelSpec, build_symbol
from .quadrature import SCAN_RULE, GridSpec, LocalRule

__all__ = [
    "CLASS_TOL",
    "ThresholdClass",
    "ExpansionFit",
    "LambdaAssumptionReport",
    "InequalityReport",
    "classify_threshold",
    "resonance_norms",
    "fit_threshold_expansion",
    "radial_slope_oracle",
    "verify_assumption_lambda",
    "threshold_inequality_report",
    "cell_centred_grid",
]

CLASS_TOL = 1e-8
RESONANCE = "Resonance"
EIGENVALUE = "ThresholdEigenvalue"
REGULAR = "Regular"
SUBCRITICAL = "Subcritical"


@dataclass(frozen=True)
class ThresholdClass:
    """Threshold type at ``p = 0``.

    ``norms`` holds ``(n, L1, L2)`` grid norms of ``phi / (u(0, .) - m)``;
    ``l2_growth`` is the log2 ratio of the two finest L2 norms (about 1/2
    when the function is in L1 but not in L2).  ``margin`` is the distance
    of the deciding quantities to the tolerance that separates classes.
    """

    kind: str
    phi_at_zero: float
    det_at_threshold: float
    norms: tuple = ()
    l1_change: float = float("nan")
    l2_growth: float = float("nan")
    margin: float = float("inf")

    @property
    def l2_diverges(self) -> bool:
        return self.l2_growth > 0.25

    @property
    def l2_stable(self) -> bool:
        return abs(self.l2_growth) < 0.1


def resonance_norms(spec: ModelSpec, ns: Sequence[int] = (16, 32, 64)) -> tuple:
    """Grid L1 and L2 norms of ``phi / (u(0, .) - m)``; nodes where the denominator vanishes are skipped."""
    sym = build_symbol(spec)
    out = []
    for n in ns:
        axis = -np.pi + 2.0 * np.pi * np.arange(n) / n
        nodes = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
        den = sym.u(np.zeros(3), nodes) - sym.m
        keep = den > 1e-14
        f = np.asarray(spec.phi(nodes), dtype=float)[keep] / den[keep]
        w = (2.0 * np.pi / n) ** 3
        out.append((int(n), math.fsum(np.abs(f)) * w, math.sqrt(math.fsum(f * f) * w)))
    return tuple(out)


def classify_threshold(
    spec: ModelSpec,
    grid=GridSpec(),
    rule: LocalRule = LocalRule(),
    tol: float = CLASS_TOL,
    norm_grids: Sequence[int] = (16, 32, 64),
) -> ThresholdClass:
    """Decide between resonance, threshold eigenvalue, bound state below ``m`` and subcritical coupling."""
    sym = build_symbol(spec)
    phi0 = float(np.asarray(spec.phi(np.zeros((1, 3))), dtype=float)[0])
    det = fredholm_det(spec, np.zeros(3), min(sym.m, minimize_q(spec, np.zeros(3)).umin), grid, rule).value
    if abs(det) <= tol:
        kind = RESONANCE if abs(phi0) > tol else EIGENVALUE
        margin = min(tol - abs(det), abs(abs(phi0) - tol))
    elif det > tol:
        kind, margin = SUBCRITICAL, det - tol
    else:
        kind, margin = REGULAR, -det - tol
    norms = resonance_norms(spec, norm_grids) if norm_grids else ()
    if len(norms) >= 2:
        (_, a1, a2), (_, b1, b2) = norms[-2], norms[-1]
        l1_change = abs(b1 - a1) / max(abs(b1), 1e-300)
        growth = math.log2(b2 / a2) if a2 > 0 and b2 > 0 else float("nan")
    else:
        l1_change, growth = float("nan"), float("nan")
    return ThresholdClass(kind, phi0, det, norms, l1_change, growth, margin)


def radial_slope_oracle(spec: ModelSpec, p=(0.0, 0.0, 0.0)) -> float:
    """Square-root coefficient from the local quadratic model of ``u_p`` at its minimizer.

    With ``u_p - u_min ~ (H s, s) / 2`` the difference
    ``Lambda(p, u_min) - Lambda(p, u_min - w^2)`` tends to
    ``phi(q0)^2 det(H/2)^(-1/2) * 4 pi int_0^inf w^2 / (r^2 + w^2) dr``;
    the radial integral (at ``w = 1``) is evaluated by adaptive quadrature.
    """
    info = minimize_q(spec, p)
    radial, _ = integrate.quad(lambda r: 4.0 * math.pi / (r * r + 1.0), 0.0, np.inf, epsabs=0.0, epsrel=1e-13)
    phi2 = float(np.asarray(spec.phi(info.q0[None, :]), dtype=float)[0]) ** 2
    return spec.mu * phi2 * radial / math.sqrt(np.linalg.det(0.5 * info.hessian))


@dataclass(frozen=True)
class ExpansionFit:
    """``Delta(p, u_min(p) - w^2) ~ a0 + a1 w``.

    ``a1_theory_candidates`` maps a label to a candidate closed form of the
    coefficient; ``matches`` lists the labels within 1% of the fitted ``a1``.
    ``residual_exponent`` is the log-log slope of
    ``|Delta - a0 - a1 w|`` in ``w``; ``p_residual_scale`` is
    ``|a0 - Delta(0, m)|``.
    """

    a0: float
    a1: float
    a2: float
    a1_theory_candidates: dict
    matches: tuple
    residual_exponent: float
    p_residual_scale: float
    a1_oracle: float
    w: np.ndarray = field(repr=False)
    delta: np.ndarray = field(repr=False)


def default_w_samples(bandwidth: float, count: int = 24) -> np.ndarray:
    return np.logspace(-3, -1, count) * math.sqrt(bandwidth)


def fit_threshold_expansion(
    spec: ModelSpec,
    p=(0.0, 0.0, 0.0),
    w_samples: Optional[Sequence[float]] = None,
    grid=GridSpec(),
    rule: LocalRule = LocalRule(),
) -> ExpansionFit:
    """Fit ``a0 + a1 w + a2 w^2 + a3 w^3`` to the determinant just below the threshold.

    All samples use the singularity-subtraction path so that the fit sees a
    single, smooth-in-``w`` approximation.
    """
    p = np.asarray(p, dtype=float).reshape(3)
    itg = integrator(spec, p, grid, rule)
    umin = itg.umin
    ws = default_w_samples(itg.bandwidth) if w_samples is None else np.asarray(w_samples, dtype=float)
    if np.any(ws <= 0):
        raise ValueError("w samples must be positive")
    a0 = 1.0 - spec.mu * itg(umin, method="subtract")
    delta = np.array([1.0 - spec.mu * itg(umin - w * w, method="subtract") for w in ws])
    A = np.stack([ws, ws**2, ws**3], axis=1)
    a1, a2, _ = np.linalg.lstsq(A, delta - a0, rcond=None)[0]
    resid = np.abs(delta - a0 - a1 * ws)
    good = resid > 0
    exponent = float(np.polyfit(np.log(ws[good]), np.log(resid[good]), 1)[0]) if good.sum() >= 2 else float("inf")

    hd = hessian_data(spec)
    phi0 = float(np.asarray(spec.phi(np.zeros((1, 3))), dtype=float)[0])
    base = math.sqrt(2.0) * math.pi**2 * spec.mu * phi0**2 / (hd.l1**1.5 * math.sqrt(np.linalg.det(hd.U)))
    cands = {"2*sqrt(2)*pi^2 form": 2.0 * base, "4*sqrt(2)*pi^2 form": 4.0 * base}
    scale = max(abs(a1), 1e-300)
    matches = tuple(k for k, v in cands.items() if abs(v - a1) <= 0.01 * max(scale, abs(v)))

    sym = build_symbol(spec)
    d00 = 1.0 - spec.mu * lambda_fn(spec, np.zeros(3), min(sym.m, minimize_q(spec, np.zeros(3)).umin), grid, rule)
    return ExpansionFit(float(a0), float(a1), float(a2), cands, matches, exponent,
                        abs(a0 - d00), radial_slope_oracle(spec, p), ws, delta)


def cell_centred_grid(k: int) -> np.ndarray:
    """``k^3`` points ``-pi + 2 pi (j + 1/2) / k``; never hits ``0`` (odd ``k`` excepted) or the cell faces."""
    axis = -np.pi + 2.0 * np.pi * (np.arange(k) + 0.5) / k
    return np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)


def _half(points):
    """One representative of each ``{p, -p}`` pair (the functions checked are even in ``p``)."""
    keep = []
    seen = set()
    for p in points:
        key = tuple(np.round(p, 12))
        neg = tuple(np.round(-p, 12) + 0.0)
        if neg in seen:
            continue
        seen.add(key)
        keep.append(p)
    return np.array(keep)


@dataclass(frozen=True)
class LambdaAssumptionReport:
    """``min_margin_i``: smallest ``Lambda(p, u_min(p)) - Lambda(0, m)`` over ``p != 0``;
    ``c_quadratic``: largest ``c`` with ``Lambda(0, m) - Lambda(p, m) >= c |p|^2`` on the ball;
    ``c_dispersion``: same against ``eps(p) - eps(0)`` (``nan`` for black-box symbols)."""

    passed_i: bool
    min_margin_i: float
    worst_p_i: tuple
    passed_ii: bool
    c_quadratic: float
    c_dispersion: float
    delta: float
    points_i: int
    points_ii: int


def verify_assumption_lambda(
    spec: ModelSpec,
    p_points=None,
    delta: float = 1.0,
    grid=GridSpec(16),
    rule: LocalRule = SCAN_RULE,
    radii: Optional[Sequence[float]] = None,
) -> LambdaAssumptionReport:
    """Check that ``Lambda(., u_min(.))`` is smallest and ``Lambda(., m)`` largest at ``p = 0``.

    Part (i) uses ``p_points`` (default: 21^3 cell-centred grid).  Part (ii)
    uses the grid points inside the ball of radius ``delta`` together with
    radial samples along the 13 lattice directions.
    """
    sym = build_symbol(spec)
    zero = np.zeros(3)
    m = min(sym.m, minimize_q(spec, zero).umin)
    lam0 = lambda_fn(spec, zero, m, grid, rule)
    pts = cell_centred_grid(21) if p_points is None else np.asarray(p_points, dtype=float).reshape(-1, 3)
    pts = _half(pts[np.linalg.norm(pts, axis=1) > 0])

    worst, worst_p = float("inf"), None
    for p in pts:
        umin = minimize_q(spec, p, strict=False).umin
        d = lambda_fn(spec, p, umin, grid, rule) - lam0
        if d < worst:
            worst, worst_p = d, tuple(float(v) for v in p)

    radii = np.logspace(-2, 0, 7) * delta if radii is None else np.asarray(radii, dtype=float)
    ball = [p for p in pts if np.linalg.norm(p) < delta]
    ball += [r * d for r in radii for d in lattice_directions() if r < delta or math.isclose(r, delta)]
    cq, cd = float("inf"), float("inf")
    for p in ball:
        diff = lam0 - lambda_fn(spec, p, m, grid, rule)
        cq = min(cq, diff / float(np.dot(p, p)))
        if spec.dispersion is not None:
            de = eval_dispersion(spec.dispersion, p) - spec.dispersion.constant
            cd = min(cd, diff / de)
    if spec.dispersion is None:
        cd = float("nan")
    return LambdaAssumptionReport(worst > 0, worst, worst_p, cq > 0, cq, cd, float(delta), len(pts), len(ball))


@dataclass(frozen=True)
class InequalityReport:
    """Resonance: ``c1 <= Delta(p, m) / |p| <= c2`` near 0 and ``Delta(p, m) >= complement_inf`` away
    from 0; ``c1`` is reported as the smaller of the two lower bounds.  Threshold eigenvalue:
    ``c`` bounds ``Delta(p, m) / |p|^2`` from below near 0."""

    kind: str
    delta: float
    c1: float = float("nan")
    c2: float = float("nan")
    band_ratio: float = float("nan")
    ratio_inf: float = float("nan")
    complement_inf: float = float("nan")
    c: float = float("nan")
    radii: np.ndarray = field(default=None, repr=False)
    ratios: np.ndarray = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        if self.kind == RESONANCE:
            return self.c1 > 0 and self.band_ratio < 10 and self.complement_inf >= self.c1
        return self.c > 0


def threshold_inequality_report(
    spec: ModelSpec,
    delta: float = 1.0,
    p_grid=None,
    kind: Optional[str] = None,
    radii: Optional[Sequence[float]] = None,
    grid=GridSpec(),
    rule: LocalRule = LocalRule(),
) -> InequalityReport:
    """Evaluate ``Delta(p, m)`` on log-spaced radii in ``[1e-3, delta]`` along 13 directions
    (and, in the resonance case, on ``p_grid`` points outside the ball)."""
    if kind is None:
        kind = classify_threshold(spec, grid, rule, norm_grids=()).kind
    if kind not in (RESONANCE, EIGENVALUE):
        raise ValueError(f"inequalities apply at a resonance or threshold eigenvalue, got {kind}")
    sym = build_symbol(spec)
    m = min(sym.m, minimize_q(spec, np.zeros(3)).umin)
    radii = np.logspace(-3, math.log10(delta), 10) if radii is None else np.asarray(radii, dtype=float)
    dirs = lattice_directions()
    power = 1 if kind == RESONANCE else 2
    ratios = np.empty((len(dirs), len(radii)))
    for i, d in enumerate(dirs):
        for j, r in enumerate(radii):
            ratios[i, j] = fredholm_det(spec, r * d, m, grid, rule).value / r**power
    if kind == EIGENVALUE:
        return InequalityReport(kind, float(delta), c=float(ratios.min()), radii=radii, ratios=ratios)
    pts = cell_centred_grid(9) if p_grid is None else np.asarray(p_grid, dtype=float).reshape(-1, 3)
    outside = _half(pts[np.linalg.norm(pts, axis=1) >= delta])
    comp = min((fredholm_det(spec, p, m, grid, rule).value for p in outside), default=float("inf"))
    lo, hi = float(ratios.min()), float(ratios.max())
    return InequalityReport(kind, float(delta), c1=min(lo, comp), c2=hi, band_ratio=hi / lo if lo > 0 else float("inf"),
                            ratio_inf=lo, complement_inf=float(comp), radii=radii, ratios=ratios)
