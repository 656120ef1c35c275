"""The eigenvalue of ``h_mu(p)`` below the essential spectrum, located as the root of the determinant."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateMinimum
from .fredholm import integrator
from .landscape import maximize_q, minimize_q
from .model import ModelSpec
from .quadrature import GridSpec, LocalRule

__all__ = [
    "EigenResult",
    "essential_spectrum",
    "find_eigenvalue",
    "monotonicity_scan",
    "monotonicity_violations",
    "EIGEN_COLUMNS",
    "eigen_row",
]

log = logging.getLogger(__name__)

EDGE_TOL = 1e-12
EIGEN_COLUMNS = ("p1", "p2", "p3", "mu", "exists", "e", "u_min", "u_max", "det_at_edge")


@dataclass(frozen=True)
class EigenResult:
    """Outcome of one eigenvalue search.

    ``edge_method`` is ``"threshold"`` when the band-edge determinant was
    evaluated exactly at ``u_min`` and ``"proxy"`` when the minimum is
    degenerate and the plain rule at ``u_min - gap_cutoff`` stood in for it.
    """

    exists: bool
    e: Optional[float]
    band: tuple
    det_at_band_edge: float
    p: tuple
    mu: float
    edge_method: str = "threshold"
    sign_checks_ok: bool = True


def essential_spectrum(spec: ModelSpec, p) -> tuple:
    """Band ``[u_min(p), u_max(p)]``."""
    return (minimize_q(spec, p, strict=False).umin, maximize_q(spec, p))


def find_eigenvalue(
    spec: ModelSpec,
    p,
    grid=GridSpec(),
    rule: LocalRule = LocalRule(),
    *,
    mu: Optional[float] = None,
    expansion: float = 2.0,
    width_tol: float = 1e-12,
    checks: int = 16,
    method: str = "auto",
) -> EigenResult:
    """Root of ``z -> 1 - mu Lambda(p, z)`` below ``u_min(p)`` by bracketing and bisection.

    An eigenvalue exists iff the determinant is negative at the band edge
    (values within ``1e-12`` of zero count as a threshold resonance, not a
    bound state).  The left end starts at ``u_min - 1`` and moves left by
    steps growing with ``expansion`` until the determinant turns positive.
    Bisection then runs until the bracket is narrower than ``width_tol``.
    Finally ``checks`` interior points are sampled to confirm a single sign
    change.
    """
    mu = spec.mu if mu is None else float(mu)
    p_t = tuple(float(v) for v in np.asarray(p, dtype=float).reshape(3))
    itg = integrator(spec, p_t, grid, rule)
    umin = itg.umin
    band = (umin, maximize_q(spec, p_t))

    def det(z):
        return 1.0 - mu * itg(z, method=method)

    edge_method = "threshold"
    try:
        if method == "plain":
            raise DegenerateMinimum("plain rule requested")
        d_edge = det(umin)
    except DegenerateMinimum:
        edge_method = "proxy"
        method = "plain"
        d_edge = det(umin - itg.gap_cutoff)
    if not d_edge < -EDGE_TOL:
        return EigenResult(False, None, band, d_edge, p_t, mu, edge_method)

    z_right = umin if edge_method == "threshold" else umin - itg.gap_cutoff
    step = 1.0
    z_left = umin - step
    while det(z_left) <= 0.0:
        z_right = z_left
        step *= expansion
        z_left = umin - step
        if step > 1e300:
            return EigenResult(False, None, band, d_edge, p_t, mu, edge_method)
    lo, hi = z_left, z_right
    while hi - lo > width_tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if det(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    e = 0.5 * (lo + hi)

    ok = True
    if checks:
        zs = np.linspace(z_left, umin, checks + 2)[1:-1]
        for z in zs:
            if abs(z - e) <= width_tol:
                continue
            v = det(float(z))
            if (z < e and v <= 0.0) or (z > e and v >= 0.0):
                ok = False
                log.warning("determinant sign pattern violated at z=%r for p=%r", z, p_t)
                break
    return EigenResult(True, float(e), band, d_edge, p_t, mu, edge_method, ok)


def monotonicity_scan(
    spec: ModelSpec,
    p,
    mus: Sequence[float],
    grid=GridSpec(),
    rule: LocalRule = LocalRule(),
) -> list:
    """Eigenvalues along an increasing coupling ladder.

    A non-decreasing step is logged as a warning; use
    :func:`monotonicity_violations` to list them.
    """
    mus = [float(m) for m in mus]
    if any(b <= a for a, b in zip(mus, mus[1:])):
        raise ValueError("mus must be strictly increasing")
    results = [find_eigenvalue(spec, p, grid, rule, mu=m) for m in mus]
    for i in monotonicity_violations(results):
        log.warning("eigenvalue not decreasing between mu=%r and mu=%r", mus[i], mus[i + 1])
    return results


def monotonicity_violations(results: Sequence[EigenResult]) -> list:
    """Indices ``i`` where result ``i+1`` fails to lie strictly below result ``i``."""
    bad = []
    for i, (a, b) in enumerate(zip(results, results[1:])):
        if a.exists and (not b.exists or not b.e < a.e):
            bad.append(i)
    return bad


def eigen_row(r: EigenResult) -> tuple:
    return (*r.p, r.mu, r.exists, r.e if r.exists else float("nan"), r.band[0], r.band[1], r.det_at_band_edge)
