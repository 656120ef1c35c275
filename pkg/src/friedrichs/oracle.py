"""Brute-force check: the discretised operator ``diag(u) - mu |phi><phi|`` and its lowest eigenvalue.

This path never touches the threshold integral; it rebuilds the grid,
weights and secular equation from scratch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelSpec, build_symbol

__all__ = ["DiscreteModel", "discretize", "lowest_eigenvalue", "dense_lowest_eigenvalue"]


@dataclass(frozen=True)
class DiscreteModel:
    nodes: np.ndarray
    weights: np.ndarray
    diag: np.ndarray
    vec: np.ndarray
    p: tuple
    n: int


def discretize(spec: ModelSpec, p, n: int) -> DiscreteModel:
    """Nodes ``-pi + 2 pi k / n`` per axis, equal weights ``(2 pi / n)^3``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    axis = np.array([-math.pi + 2.0 * math.pi * k / n for k in range(n)])
    nodes = np.array(np.meshgrid(axis, axis, axis, indexing="ij")).reshape(3, -1).T.copy()
    weights = np.full(len(nodes), (2.0 * math.pi / n) ** 3)
    p = np.asarray(p, dtype=float).reshape(3)
    diag = np.asarray(build_symbol(spec).u(p, nodes), dtype=float)
    vec = np.asarray(spec.phi(nodes), dtype=float)
    return DiscreteModel(nodes, weights, diag, vec, tuple(float(v) for v in p), n)


def lowest_eigenvalue(dm: DiscreteModel, mu: float, width_tol: float = 1e-12) -> float:
    """Smallest ``lambda < min(diag)`` with ``1 = mu sum w phi^2 / (diag - lambda)``.

    Returns ``min(diag)`` when the secular equation has no root below it.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    c = dm.weights * dm.vec**2
    dmin = float(dm.diag.min())

    def secular(lam):
        return 1.0 - mu * math.fsum(c / (dm.diag - lam))

    at_min = dm.diag == dmin
    if not np.any(c[at_min] > 0.0):
        rest = ~at_min
        if 1.0 - mu * math.fsum(c[rest] / (dm.diag[rest] - dmin)) >= 0.0:
            return dmin
    hi = dmin
    lo = dmin - mu * math.fsum(c) - 1.0
    while secular(lo) <= 0.0:
        lo = dmin - 2.0 * (dmin - lo)
    while hi - lo > width_tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if secular(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def dense_lowest_eigenvalue(dm: DiscreteModel, mu: float) -> float:
    """Lowest eigenvalue of the symmetrised dense matrix (small grids only)."""
    s = np.sqrt(dm.weights) * dm.vec
    return float(np.linalg.eigvalsh(np.diag(dm.diag) - mu * np.outer(s, s))[0])
