"""Threshold integral ``Lambda(p, z)``, the determinant ``1 - mu Lambda`` and the critical coupling."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import AboveThreshold, DegenerateMinimum, InfiniteLambda
from .landscape import maximize_q, minimize_q
from .model import ModelSpec, build_symbol
from .quadrature import GridSpec, LocalRule, ThresholdIntegrator, _as_grid

__all__ = ["DetValue", "integrator", "lambda_fn", "fredholm_det", "mu0", "bs_eigenvalue", "AT_THRESHOLD_TOL"]

AT_THRESHOLD_TOL = 1e-12


@dataclass(frozen=True)
class DetValue:
    value: float
    p: tuple
    z: float
    at_threshold: bool


def _p_key(p):
    return tuple(float(v) for v in np.asarray(p, dtype=float).reshape(3))


@lru_cache(maxsize=32)
def _integrator(dispersion, symbol, phi, p_key, grid, rule):
    spec = ModelSpec(phi=phi, mu=1.0, dispersion=dispersion, symbol=symbol)
    sym = build_symbol(spec)
    p = np.array(p_key)
    info = minimize_q(spec, p, strict=False)
    band = maximize_q(spec, p) - info.umin

    def num(t):
        return np.asarray(phi(t), dtype=float) ** 2

    def u_p(t):
        return sym.u(p, t)

    return ThresholdIntegrator(num, u_p, info.q0, info.umin, info.hessian, grid, rule, bandwidth=band)


def integrator(spec: ModelSpec, p, grid=GridSpec(), rule: LocalRule = LocalRule()) -> ThresholdIntegrator:
    """Cached integrator of ``phi^2 / (u_p - z)`` for one ``p`` (independent of ``mu``)."""
    return _integrator(spec.dispersion, spec.symbol, spec.phi, _p_key(p), _as_grid(grid), rule)


def lambda_fn(spec: ModelSpec, p, z: float, grid=GridSpec(), rule: LocalRule = LocalRule(), method: str = "auto") -> float:
    """``Lambda(p, z) = int phi(t)^2 / (u(p, t) - z) dt`` for real ``z <= u_min(p)``."""
    return integrator(spec, p, grid, rule)(float(z), method=method)


def fredholm_det(
    spec: ModelSpec,
    p,
    z: float,
    grid=GridSpec(),
    rule: LocalRule = LocalRule(),
    method: str = "auto",
    mu: Optional[float] = None,
) -> DetValue:
    """``1 - mu Lambda(p, z)``; ``mu`` defaults to ``spec.mu`` and may be overridden (including 0)."""
    mu = spec.mu if mu is None else float(mu)
    itg = integrator(spec, p, grid, rule)
    z = float(z)
    value = 1.0 if mu == 0.0 else 1.0 - mu * itg(z, method=method)
    at = abs(z - itg.umin) <= AT_THRESHOLD_TOL * max(1.0, abs(itg.umin))
    return DetValue(float(value), _p_key(p), z, at)


def _threshold_lambda(spec, grid, rule):
    sym = build_symbol(spec)
    itg = integrator(spec, np.zeros(3), grid, rule)
    z = min(sym.m, itg.umin)
    try:
        return itg(z)
    except DegenerateMinimum as exc:
        raise InfiniteLambda(f"threshold integral at p=0 is not controlled: {exc}") from exc


def mu0(spec: ModelSpec, grid=GridSpec(), rule: LocalRule = LocalRule(), stability: float = 0.1) -> float:
    """Critical coupling ``1 / Lambda(0, m)``.

    The threshold integral is also evaluated on the grid coarsened by 2; a
    relative change above ``stability`` is read as divergence and raises
    :class:`InfiniteLambda`.
    """
    grid = _as_grid(grid)
    fine = _threshold_lambda(spec, grid, rule)
    if not np.isfinite(fine) or fine <= 0.0:
        raise InfiniteLambda(f"threshold integral at p=0 is {fine}")
    if grid.n >= 16:
        coarse = _threshold_lambda(spec, grid.coarsened(), rule)
        if abs(fine - coarse) > stability * abs(fine):
            raise InfiniteLambda(f"threshold integral unstable under refinement: {coarse} -> {fine}")
    return 1.0 / fine


def bs_eigenvalue(spec: ModelSpec, p, z: float, grid=GridSpec(), rule: LocalRule = LocalRule(), method: str = "auto") -> float:
    """Nonzero eigenvalue ``mu Lambda(p, z)`` of the rank-one Birman-Schwinger operator (``z < u_min(p)``)."""
    itg = integrator(spec, p, grid, rule)
    if not z < itg.umin:
        raise AboveThreshold(f"z={z} is not below u_min(p)={itg.umin}")
    return spec.mu * itg(float(z), method=method)
