"""Quadrature over the 3-torus for smooth and threshold-singular integrands.

Smooth integrands use the periodic trapezoidal (product midpoint) rule.  For
``num(t) / (u_p(t) - z)`` with ``z`` at or just below ``min u_p`` the
integrand is split with a smooth radial cutoff ``chi`` centred on the
minimizer ``q0``::

    f = chi * f + (1 - chi) * f

The second piece is smooth and periodic, so the trapezoidal rule converges
spectrally.  The first is integrated in spherical coordinates of the
Hessian-normalised variable ``s = L^T (t - q0)`` (``H ~ L L^T``), where the
``r^2`` volume factor cancels the ``1/r^2`` threshold singularity; the radial
direction uses Gauss-Legendre panels refined geometrically towards ``r = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from .dispersion import wrap
from .errors import AboveThreshold, DegenerateMinimum

__all__ = [
    "GridSpec",
    "LocalRule",
    "SCAN_RULE",
    "grid_nodes",
    "integrate_smooth",
    "ThresholdIntegrator",
    "integrate_threshold",
    "cutoff",
]

TORUS_VOLUME = (2.0 * np.pi) ** 3


@dataclass(frozen=True)
class GridSpec:
    """Uniform ``n^3`` product grid; ``levels`` counts halvings in convergence studies."""

    n: int = 64
    levels: int = 3
    max_nodes: int = 2**24

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8:
            raise ValueError(f"n must be ≥ 8 (got {self.n})")
        if self.n**3 > self.max_nodes:
            raise ValueError(f"n^3 = {self.n ** 3} nodes exceeds the memory budget of {self.max_nodes}")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")

    @property
    def weight(self) -> float:
        return (2.0 * np.pi / self.n) ** 3

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.n * factor, self.levels, max(self.max_nodes, (self.n * factor) ** 3))

    def coarsened(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.n // factor, self.levels, self.max_nodes)


@dataclass(frozen=True)
class LocalRule:
    """Parameters of the threshold (subtraction) path."""

    outer_radius: float = 3.0  # longest semi-axis of the cutoff ellipsoid; must stay < pi
    inner_fraction: float = 0.1  # chi == 1 inside this fraction of the outer radius
    anisotropy_clip: float = 4.0
    polar: int = 24
    azimuth: int = 48
    gauss: int = 16
    radial_levels: int = 12
    outer_panels: int = 8
    max_levels: int = 60
    gap_fraction: float = 1e-3
    plain_resolution: float = 24.0
    hessian_floor: float = 1e-8

    def __post_init__(self):
        if not 0.0 < self.outer_radius < np.pi:
            raise ValueError("outer_radius must lie in (0, pi)")
        if not 0.0 < self.inner_fraction < 1.0:
            raise ValueError("inner_fraction must lie in (0, 1)")


# lighter local rule for wide p-scans; about 1e-5 relative at n = 16
SCAN_RULE = LocalRule(polar=12, azimuth=24, gauss=8, radial_levels=8)


@lru_cache(maxsize=8)
def grid_nodes(n: int) -> np.ndarray:
    """Nodes ``-pi + 2 pi k / n`` in lexicographic (i, j, k) order, shape (n^3, 3)."""
    t = -np.pi + 2.0 * np.pi * np.arange(n) / n
    nodes = np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=-1).reshape(-1, 3)
    nodes.setflags(write=False)
    return nodes


def _as_grid(g) -> GridSpec:
    return g if isinstance(g, GridSpec) else GridSpec(int(g))


_BLOCK = 1024


def fixed_sum(values) -> float:
    """Deterministic compensated sum.

    Fixed-size blocks are summed pairwise, then the block sums are added
    exactly, so the result depends only on the values and their order.
    """
    x = np.asarray(values, dtype=float).ravel()
    pad = (-x.size) % _BLOCK
    if pad:
        x = np.concatenate([x, np.zeros(pad)])
    return math.fsum(x.reshape(-1, _BLOCK).sum(axis=1))


def integrate_smooth(f: Callable, g=GridSpec()) -> float:
    """Trapezoidal rule ``(2 pi / n)^3 * sum f(t_i)`` over the torus."""
    g = _as_grid(g)
    return fixed_sum(f(grid_nodes(g.n))) * g.weight


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    inside = (x > 0.0) & (x < 1.0)
    a = np.zeros_like(x)
    b = np.zeros_like(x)
    xi = x[inside]
    a[inside] = np.exp(-1.0 / xi)
    b[inside] = np.exp(-1.0 / (1.0 - xi))
    out = np.where(x >= 1.0, 1.0, 0.0)
    out[inside] = a[inside] / (a[inside] + b[inside])
    return out


def cutoff(r, inner, outer):
    """C-infinity radial cutoff: 1 for ``r <= inner``, 0 for ``r >= outer``."""
    return 1.0 - _smoothstep((np.asarray(r, dtype=float) - inner) / (outer - inner))


@lru_cache(maxsize=4)
def _sphere_rule(polar: int, azimuth: int):
    x, wx = leggauss(polar)
    phi = 2.0 * np.pi * np.arange(azimuth) / azimuth
    ct, ph = np.meshgrid(x, phi, indexing="ij")
    st = np.sqrt(1.0 - ct**2)
    dirs = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=-1).reshape(-1, 3)
    weights = np.repeat(wx, azimuth) * (2.0 * np.pi / azimuth)
    return dirs, weights


def _radial_rule(inner: float, outer: float, levels: int, panels: int, order: int):
    gx, gw = leggauss(order)
    edges = [0.0] + [inner * 0.5**k for k in range(levels, 0, -1)] + list(np.linspace(inner, outer, panels + 1))
    r = []
    w = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        r.append(lo + 0.5 * (hi - lo) * (gx + 1.0))
        w.append(0.5 * (hi - lo) * gw)
    return np.concatenate(r), np.concatenate(w)


class ThresholdIntegrator:
    """``z -> int num(t) / (u_p(t) - z) dt`` for one fixed ``p``.

    Node data for both paths are built lazily and reused across ``z``, which
    makes z-sweeps (bisection, expansion fits) cheap.

    Parameters
    ----------
    num, u_p : callable
        Vectorized functions of ``t`` with shape (..., 3).
    q0, umin : minimizer and minimum value of ``u_p``.
    hessian : 3x3 Hessian of ``u_p`` at ``q0``.
    bandwidth : ``u_max - u_min``; estimated from the grid when omitted.
    """

    def __init__(self, num, u_p, q0, umin, hessian, grid=GridSpec(), rule=LocalRule(), bandwidth=None):
        self.num = num
        self.u_p = u_p
        self.q0 = np.asarray(q0, dtype=float)
        self.umin = float(umin)
        self.hessian = np.asarray(hessian, dtype=float)
        self.grid = _as_grid(grid)
        self.rule = rule
        self._plain = None
        self._far = None
        self._local = {}
        self._geometry = None
        if bandwidth is None:
            u_nodes, _ = self._plain_data()
            bandwidth = float(u_nodes.max()) - self.umin
        self.bandwidth = float(bandwidth)

    @property
    def gap_cutoff(self) -> float:
        """Gap ``umin - z`` below which the subtraction path is used."""
        rel = self.rule.gap_fraction * self.bandwidth
        return max(rel, (self.rule.plain_resolution / self.grid.n) ** 2)

    def _plain_data(self):
        if self._plain is None:
            nodes = grid_nodes(self.grid.n)
            self._plain = (np.asarray(self.u_p(nodes), dtype=float), np.asarray(self.num(nodes), dtype=float))
        return self._plain

    def plain(self, z: float) -> float:
        u, num = self._plain_data()
        return fixed_sum(num / (u - z)) * self.grid.weight

    def _geom(self):
        if self._geometry is None:
            evals, V = np.linalg.eigh(0.5 * (self.hessian + self.hessian.T))
            if evals.min() <= self.rule.hessian_floor:
                raise DegenerateMinimum(
                    f"Hessian of u_p at q0={self.q0} has eigenvalue {evals.min():.3e} "
                    f"<= floor {self.rule.hessian_floor:.1e}"
                )
            clipped = np.maximum(evals, evals.max() / self.rule.anisotropy_clip)
            metric = (V * clipped) @ V.T
            L = np.linalg.cholesky(metric)
            outer = self.rule.outer_radius * math.sqrt(clipped.min())
            inner = self.rule.inner_fraction * outer
            to_t = np.linalg.inv(L.T)
            jac = 1.0 / float(np.prod(np.diag(L)))
            self._geometry = (L, to_t, jac, inner, outer)
        return self._geometry

    def _far_data(self):
        if self._far is None:
            L, _, _, inner, outer = self._geom()
            nodes = grid_nodes(self.grid.n)
            r = np.linalg.norm(wrap(nodes - self.q0) @ L, axis=1)
            weight = 1.0 - cutoff(r, inner, outer)
            keep = weight > 0.0
            u, num = self._plain_data()
            self._far = (u[keep], num[keep] * weight[keep])
        return self._far

    def _local_data(self, levels: int):
        if levels not in self._local:
            _, to_t, jac, inner, outer = self._geom()
            rule = self.rule
            r, wr = _radial_rule(inner, outer, levels, rule.outer_panels, rule.gauss)
            dirs, wd = _sphere_rule(rule.polar, rule.azimuth)
            tdirs = dirs @ to_t.T
            pts = self.q0 + r[:, None, None] * tdirs[None, :, :]
            du = np.asarray(self.u_p(pts), dtype=float) - self.umin
            # where u - umin is lost in rounding, fall back to the quadratic model
            model = 0.5 * r[:, None] ** 2 * np.einsum("di,ij,dj->d", tdirs, self.hessian, tdirs)[None, :]
            du = np.where(du < 64.0 * np.finfo(float).eps * max(1.0, abs(self.umin)), model, du)
            num = np.asarray(self.num(pts), dtype=float)
            w = (jac * r**2 * wr * cutoff(r, inner, outer))[:, None] * wd[None, :]
            self._local[levels] = (du, num * w)
        return self._local[levels]

    def _levels_for(self, gap: float) -> int:
        base = self.rule.radial_levels
        if gap <= 0.0:
            return base
        inner = self._geom()[3]
        need = math.ceil(math.log2(inner / math.sqrt(gap))) + 3
        return int(min(max(base, need), self.rule.max_levels))

    def subtract(self, z: float) -> float:
        gap = max(self.umin - z, 0.0)
        zz = self.umin - gap
        u_far, num_far = self._far_data()
        du_loc, num_loc = self._local_data(self._levels_for(gap))
        far = fixed_sum(num_far / (u_far - zz)) * self.grid.weight
        local = fixed_sum(num_loc / (du_loc + gap))
        return far + local

    def __call__(self, z: float, method: str = "auto") -> float:
        z = float(z)
        if z > self.umin + 1e-12 * max(1.0, abs(self.umin)):
            raise AboveThreshold(f"z = {z!r} exceeds u_min(p) = {self.umin!r}")
        if method == "plain":
            return self.plain(z)
        if method == "subtract":
            return self.subtract(z)
        if method != "auto":
            raise ValueError(f"unknown method {method!r}")
        if self.umin - z > self.gap_cutoff:
            return self.plain(z)
        return self.subtract(z)


def integrate_threshold(
    num: Callable,
    u_p: Callable,
    z: float,
    grid=GridSpec(),
    *,
    q0,
    umin: float,
    hessian,
    bandwidth: Optional[float] = None,
    rule: LocalRule = LocalRule(),
    method: str = "auto",
) -> float:
    """One-shot ``int num(t) / (u_p(t) - z) dt`` for ``z <= umin``.

    Uses the plain rule when ``umin - z`` exceeds the gap cutoff and the
    cutoff-plus-spherical decomposition otherwise.  Raises
    :class:`AboveThreshold` for ``z > umin`` and :class:`DegenerateMinimum`
    when the subtraction path meets a flat Hessian.
    """
    return ThresholdIntegrator(num, u_p, q0, umin, hessian, grid, rule, bandwidth)(z, method)
