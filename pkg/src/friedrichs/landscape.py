"""Minimizer tracking for ``q -> u(p, q)`` and Hessian structure at the origin."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from ._newton import newton_minimize
from .dispersion import wrap
from .errors import DegenerateMinimum, NonUniqueMinimum, StructureViolation
from .model import ModelSpec, build_symbol

__all__ = [
    "MinimumInfo",
    "HessianData",
    "UminExpansion",
    "minimize_q",
    "maximize_q",
    "hessian_data",
    "fit_umin_expansion",
    "validated_radius",
    "lattice_directions",
    "landscape_rows",
    "LANDSCAPE_COLUMNS",
]

log = logging.getLogger(__name__)

HESSIAN_FLOOR = 1e-8
SEED_GRID = 32
LANDSCAPE_COLUMNS = ("p1", "p2", "p3", "q0_1", "q0_2", "q0_3", "u_min", "u_max")


@dataclass(frozen=True)
class MinimumInfo:
    q0: np.ndarray
    umin: float
    hessian: np.ndarray
    nondegenerate: bool
    grad_norm: float = 0.0
    unique: bool = True


@dataclass(frozen=True)
class HessianData:
    """``d2u/dpdp = l1 U``, ``d2u/dpdq = l U``, ``d2u/dqdq = l2 U`` at (0, 0), det U = 1."""

    U: np.ndarray
    l1: float
    l: float
    l2: float
    m: float
    blocks: tuple


def lattice_directions() -> np.ndarray:
    """The 13 lattice directions of the cube (axes, face and body diagonals), normalised."""
    dirs = [(1, 0, 0), (0, 1, 0), (0, 0, 1),
            (1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1), (0, 1, 1), (0, 1, -1),
            (1, 1, 1), (1, 1, -1), (1, -1, 1), (-1, 1, 1)]
    d = np.array(dirs, dtype=float)
    return d / np.linalg.norm(d, axis=1, keepdims=True)


@lru_cache(maxsize=4)
def _seed_nodes(n: int) -> np.ndarray:
    t = -np.pi + 2.0 * np.pi * np.arange(n) / n
    return np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=-1).reshape(-1, 3)


def _torus_dist(a, b) -> float:
    return float(np.linalg.norm(wrap(np.asarray(a) - np.asarray(b))))


def _extremize(sym, p, sign, seed_n, candidates):
    """Local refinement of the best grid cells of ``sign * u_p``."""
    nodes = _seed_nodes(seed_n)
    vals = sign * sym.u(p, nodes)
    grid = vals.reshape(seed_n, seed_n, seed_n)
    local = np.ones_like(grid, dtype=bool)
    for ax in range(3):
        for shift in (1, -1):
            local &= grid <= np.roll(grid, shift, axis=ax)
    idx = np.flatnonzero(local.ravel())
    vmin = vals[idx].min()
    quant = np.floor((vals[idx] - vmin) / (1e-10 * max(1.0, abs(vmin))))
    dist = np.linalg.norm(nodes[idx], axis=1)
    order = idx[np.lexsort((dist, quant))][:candidates]

    def f(q):
        return sign * float(sym.u(p, q[None, :])[0])

    def g(q):
        return sign * sym.grad_q(p, q[None, :])[0]

    def h(q):
        return sign * sym.hess_qq(p, q[None, :])[0]

    found = []
    for i in order:
        q, gnorm, _ = newton_minimize(f, g, h, nodes[i], gtol=1e-12)
        q = wrap(q)
        val = f(q)
        if any(_torus_dist(q, c[0]) <= 1e-6 for c in found):
            continue
        found.append((q, val, gnorm))
    return found


def _select(found):
    vmin = min(v for _, v, _ in found)
    tol = 1e-10 * max(1.0, abs(vmin))
    ties = sorted((c for c in found if c[1] <= vmin + tol), key=lambda c: float(np.linalg.norm(c[0])))
    unique = True
    if len(ties) > 1:
        d0 = float(np.linalg.norm(ties[0][0]))
        d1 = float(np.linalg.norm(ties[1][0]))
        if abs(d0 - d1) <= 1e-10 and _torus_dist(ties[0][0], ties[1][0]) > 1e-6:
            unique = False
    return ties[0], unique


@lru_cache(maxsize=4096)
def _minimum(sym, p_key, seed_n, candidates, floor):
    p = np.array(p_key)
    found = _extremize(sym, p, 1.0, seed_n, candidates)
    (q0, umin, gnorm), unique = _select(found)
    hess = sym.hess_qq(p, q0[None, :])[0]
    nondeg = bool(np.linalg.eigvalsh(hess).min() > floor)
    q0.setflags(write=False)
    hess.setflags(write=False)
    return MinimumInfo(q0, float(umin), hess, nondeg, float(gnorm), unique)


def _p_key(p):
    return tuple(float(v) for v in wrap(np.asarray(p, dtype=float).reshape(3)))


def minimize_q(
    spec: ModelSpec,
    p,
    *,
    strict: bool = True,
    seed_n: int = SEED_GRID,
    candidates: int = 8,
    floor: float = HESSIAN_FLOOR,
) -> MinimumInfo:
    """Global minimizer of ``u_p`` by grid seeding and damped Newton refinement.

    Ties in value are broken by distance to the origin.  With ``strict`` the
    call raises :class:`NonUniqueMinimum` when two tied minimizers are also
    equidistant from 0, and :class:`DegenerateMinimum` when the Hessian's
    smallest eigenvalue does not exceed ``floor``; otherwise those conditions
    are only recorded in the returned flags.
    """
    info = _minimum(build_symbol(spec), _p_key(p), seed_n, candidates, floor)
    if strict:
        if not info.unique:
            raise NonUniqueMinimum(f"u_p has several minimizers equidistant from 0 at p={_p_key(p)}")
        if not info.nondegenerate:
            raise DegenerateMinimum(
                f"minimum of u_p at p={_p_key(p)} is degenerate "
                f"(smallest Hessian eigenvalue {np.linalg.eigvalsh(info.hessian).min():.3e})"
            )
    return info


@lru_cache(maxsize=4096)
def _maximum(sym, p_key, seed_n, candidates):
    found = _extremize(sym, np.array(p_key), -1.0, seed_n, candidates)
    return -min(v for _, v, _ in found)


def maximize_q(spec: ModelSpec, p, *, seed_n: int = SEED_GRID, candidates: int = 8) -> float:
    """Global maximum of ``u_p`` (grid seeding plus Newton on ``-u_p``)."""
    return _maximum(build_symbol(spec), _p_key(p), seed_n, candidates)


def _factor_blocks(pp, pq, qq, tol):
    qq = 0.5 * (qq + qq.T)
    try:
        np.linalg.cholesky(qq)
    except np.linalg.LinAlgError as exc:
        raise StructureViolation("d2u/dqdq at the origin is not positive definite") from exc
    U = qq / np.linalg.det(qq) ** (1.0 / 3.0)
    scales = []
    for name, B in (("pp", pp), ("pq", pq), ("qq", qq)):
        s = float(np.sum(B * U) / np.sum(U * U))
        resid = np.linalg.norm(B - s * U) / max(np.linalg.norm(B), 1e-300)
        if resid > tol:
            raise StructureViolation(f"block {name} is not a multiple of U (relative defect {resid:.2e})")
        scales.append(s)
    return U, scales


def hessian_data(spec: ModelSpec, *, method: str = "analytic", tol: float = 1e-6, h: float = 1e-3) -> HessianData:
    """Second-derivative blocks of ``u`` at the origin factored as ``(l1, l, l2) * U``.

    ``method="fd"`` uses central differences with Richardson step halving
    regardless of the symbol type.
    """
    sym = build_symbol(spec)
    zero = np.zeros(3)
    u00 = float(sym.u(zero, zero[None, :])[0])
    if u00 > sym.m + 1e-10 * max(1.0, abs(sym.m)):
        raise StructureViolation(f"global minimum {sym.m} of u is not attained at the origin (u(0,0)={u00})")
    if method == "analytic":
        pp, pq, qq = sym.blocks(zero, zero)
    elif method == "fd":
        pp, pq, qq = _fd_blocks(sym, h)
    else:
        raise ValueError(f"unknown method {method!r}")
    U, (l1, l, l2) = _factor_blocks(np.asarray(pp), np.asarray(pq), np.asarray(qq), tol)
    if l1 <= 0 or l2 <= 0:
        raise StructureViolation(f"need l1, l2 > 0, got l1={l1}, l2={l2}")
    if abs(l) <= 1e-12:
        raise StructureViolation("mixed block vanishes (l = 0)")
    if l1 * l2 <= l * l:
        raise StructureViolation(f"l1*l2 <= l^2 ({l1 * l2} <= {l * l})")
    return HessianData(U, l1, l, l2, sym.m, (pp, pq, qq))


def _fd_blocks(sym, h):
    def f(x):
        return float(sym.u(x[:3], x[None, 3:])[0])

    def hess(step):
        H = np.empty((6, 6))
        x = np.zeros(6)
        f0 = f(x)
        for i in range(6):
            e = np.zeros(6)
            e[i] = step
            H[i, i] = (f(x + e) - 2 * f0 + f(x - e)) / step**2
            for j in range(i):
                d = np.zeros(6)
                d[j] = step
                H[i, j] = H[j, i] = (f(x + e + d) - f(x + e - d) - f(x - e + d) + f(x - e - d)) / (4 * step**2)
        return H

    H = (4.0 * hess(h) - hess(2.0 * h)) / 3.0
    return H[:3, :3], H[:3, 3:], H[3:, 3:]


@dataclass(frozen=True)
class UminExpansion:
    """Quadratic law ``u_min(p) - m ~ (Q p, p)`` and the q0 slope, fitted and predicted.

    ``coefficient_candidates`` maps a label to the scalar ``c`` in
    ``Q = c U``; ``matches`` lists labels within 1% of the fitted scalar.
    """

    Q: np.ndarray
    coefficient: float
    residual_exponent: float
    Q_schur: np.ndarray
    Q_composed: np.ndarray
    coefficient_candidates: dict
    matches: tuple
    slope: np.ndarray
    slope_scalar: float
    slope_candidates: dict
    slope_matches: tuple
    radii: np.ndarray
    residual_rms: np.ndarray


def _within(a, b, rel=0.01):
    return abs(a - b) <= rel * max(abs(a), abs(b), 1e-300)


def fit_umin_expansion(spec: ModelSpec, radii: Optional[Sequence[float]] = None, directions=None) -> UminExpansion:
    """Fit ``u_min(p) - m`` by ``(Q p, p)`` over small ``p`` and measure the residual order.

    Along each direction ``d`` the profile ``rho -> u_min(rho d) - m`` is
    fitted by ``a rho^2 + b rho^4 + c rho^6``; ``Q`` is the least-squares
    quadratic form with ``(Q d, d) = a_d``.  The residual
    ``u_min - m - (Q p, p)`` is regressed log-log against ``|p|``.
    """
    hd = hessian_data(spec)
    radii = np.logspace(-3, -1, 9) if radii is None else np.asarray(radii, dtype=float)
    dirs = lattice_directions() if directions is None else np.asarray(directions, dtype=float)
    m = hd.m

    prof = np.empty((len(dirs), len(radii)))
    q0s = np.empty((len(dirs), len(radii), 3))
    for i, d in enumerate(dirs):
        for j, r in enumerate(radii):
            info = minimize_q(spec, r * d)
            prof[i, j] = info.umin - m
            q0s[i, j] = info.q0

    basis = np.stack([radii**2, radii**4, radii**6], axis=1)
    scale = 1.0 / radii**2
    a = np.array([np.linalg.lstsq(basis * scale[:, None], prof[i] * scale, rcond=None)[0][0] for i in range(len(dirs))])

    rows = np.stack([dirs[:, 0] ** 2, dirs[:, 1] ** 2, dirs[:, 2] ** 2,
                     2 * dirs[:, 0] * dirs[:, 1], 2 * dirs[:, 0] * dirs[:, 2], 2 * dirs[:, 1] * dirs[:, 2]], axis=1)
    c = np.linalg.lstsq(rows, a, rcond=None)[0]
    Q = np.array([[c[0], c[3], c[4]], [c[3], c[1], c[5]], [c[4], c[5], c[2]]])

    quad = np.einsum("di,ij,dj->d", dirs, Q, dirs)
    resid = prof - quad[:, None] * radii[None, :] ** 2
    rms = np.sqrt(np.mean(resid**2, axis=0))
    good = rms > 0
    exponent = float(np.polyfit(np.log(radii[good]), np.log(rms[good]), 1)[0]) if good.sum() >= 2 else float("inf")

    pp, pq, qq = (np.asarray(b) for b in hd.blocks)
    Q_schur = 0.5 * (pp - pq @ np.linalg.solve(qq, pq.T))
    Q_composed = _composed_hessian(spec, m)

    Uinv = np.linalg.inv(hd.U)
    coefficient = float(np.trace(Q @ Uinv) / 3.0)
    l1, l, l2 = hd.l1, hd.l, hd.l2
    cands = {
        "(l1^2-l2^2)/(2 l1)": (l1**2 - l2**2) / (2 * l1),
        "(l1 l2-l^2)/(2 l)": (l1 * l2 - l**2) / (2 * l),
        "(l1 l2-l^2)/(2 l2)": (l1 * l2 - l**2) / (2 * l2),
    }
    matches = tuple(k for k, v in cands.items() if _within(coefficient, v))

    small = radii <= radii.min() * 10.0 + 1e-300
    P = np.concatenate([r * dirs for r in radii[small]])
    Y = np.concatenate([q0s[:, j] for j in np.flatnonzero(small)])
    S = np.linalg.lstsq(P, Y, rcond=None)[0].T
    slope = float(np.trace(S) / 3.0)
    slope_cands = {"-l/l2": -l / l2, "-l2/l1": -l2 / l1}
    slope_matches = tuple(k for k, v in slope_cands.items() if _within(slope, v))

    return UminExpansion(Q, coefficient, exponent, Q_schur, Q_composed, cands, matches,
                         S, slope, slope_cands, slope_matches, radii, rms)


def _composed_hessian(spec, m, h=1e-2):
    """Central-difference Hessian of ``p -> u_min(p)`` at 0 (Richardson-extrapolated)."""
    def umin(p):
        return minimize_q(spec, p).umin - m

    def hess(step):
        H = np.empty((3, 3))
        f0 = umin(np.zeros(3))
        for i in range(3):
            e = np.zeros(3)
            e[i] = step
            H[i, i] = (umin(e) - 2 * f0 + umin(-e)) / step**2
            for j in range(i):
                d = np.zeros(3)
                d[j] = step
                H[i, j] = H[j, i] = (umin(e + d) - umin(e - d) - umin(-e + d) + umin(-e - d)) / (4 * step**2)
        return H

    return 0.5 * (4.0 * hess(h) - hess(2.0 * h)) / 3.0


def validated_radius(
    spec: ModelSpec,
    radii: Sequence[float] = (0.0625, 0.125, 0.25, 0.5, 1.0),
    seeds: int = 10,
    spread: float = 0.3,
    seed: int = 0,
) -> float:
    """Largest tested ``|p|`` inside which Newton from ``seeds`` perturbed starts
    always returns the same non-degenerate minimizer (0.0 when none passes)."""
    sym = build_symbol(spec)
    rng = np.random.default_rng(seed)
    dirs = np.concatenate([lattice_directions(), -lattice_directions()])
    best = 0.0
    for r in sorted(radii):
        ok = True
        for d in dirs:
            p = r * d
            try:
                info = minimize_q(spec, p)
            except (DegenerateMinimum, NonUniqueMinimum):
                ok = False
                break

            def f(q):
                return float(sym.u(p, q[None, :])[0])

            def g(q):
                return sym.grad_q(p, q[None, :])[0]

            def h(q):
                return sym.hess_qq(p, q[None, :])[0]

            for _ in range(seeds):
                start = info.q0 + rng.normal(scale=spread, size=3)
                q, _, _ = newton_minimize(f, g, h, start, gtol=1e-12)
                if _torus_dist(q, info.q0) > 1e-6:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            break
        best = float(r)
    return best


def landscape_rows(spec: ModelSpec, ps) -> list:
    """Rows ``(p1, p2, p3, q0_1, q0_2, q0_3, u_min, u_max)`` in input order."""
    rows = []
    for p in ps:
        info = minimize_q(spec, p, strict=False)
        rows.append((*np.asarray(p, float), *info.q0, info.umin, maximize_q(spec, p)))
    return rows
