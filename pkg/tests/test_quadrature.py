from __future__ import annotations

import math

import numpy as np
import pytest

from friedrichs import AboveThreshold, DegenerateMinimum, GridSpec, build_symbol, cubic_nn, integrate_smooth, integrate_threshold
from friedrichs.quadrature import ThresholdIntegrator, fixed_sum

from conftest import LAMBDA00

EPS = cubic_nn()


def _u0(t):
    return 2.0 * EPS(t)


def _one(t):
    return np.ones(t.shape[:-1])


def _threshold(num, z, n, **kw):
    return integrate_threshold(num, _u0, z, GridSpec(n), q0=np.zeros(3), umin=0.0, hessian=2 * np.eye(3), bandwidth=12.0, **kw)


def test_grid_validation():
    with pytest.raises(ValueError, match="n must be"):
        GridSpec(7)
    with pytest.raises(ValueError):
        GridSpec(2048)
    assert GridSpec(16).refined().n == 32 and GridSpec(16).coarsened().n == 8


def test_constant_and_trig():
    assert integrate_smooth(_one, GridSpec(8)) == pytest.approx((2 * np.pi) ** 3, rel=1e-15)
    assert abs(integrate_smooth(lambda t: np.cos(t[..., 0]), GridSpec(16))) < 1e-12


def test_smooth_self_convergence():
    def f(t):
        return 1.0 / (EPS(t) + 1.0)

    vals = [integrate_smooth(f, GridSpec(n)) for n in (16, 32, 64, 128)]
    assert abs(vals[2] - vals[3]) < 1e-10
    d = np.abs(np.diff(vals))
    assert d[1] <= d[0] / 4 and (d[2] <= d[1] / 4 or d[2] < 1e-12)


def test_fixed_sum_deterministic_and_accurate(rng):
    x = rng.standard_normal(100_003) * 1e6
    assert fixed_sum(x) == fixed_sum(x.copy())
    assert abs(fixed_sum(x) - math.fsum(x)) <= 1e-9 * np.abs(x).sum() * 1e-6


def test_paths_agree_below_threshold():
    plain = integrate_smooth(lambda t: 1.0 / (_u0(t) + 1.0), GridSpec(64))
    assert _threshold(_one, -1.0, 64, method="subtract") == pytest.approx(plain, abs=1e-9)
    assert _threshold(_one, -1.0, 64, method="plain") == plain


def test_watson_value_at_threshold():
    a, b = _threshold(_one, 0.0, 64), _threshold(_one, 0.0, 128)
    assert abs(a - b) <= 1e-5 * b
    assert b == pytest.approx(LAMBDA00, rel=1e-10)


def test_odd_numerator_converges():
    def num(t):
        return np.sin(t[..., 0]) ** 2

    vals = [_threshold(num, 0.0, n) for n in (16, 32, 64)]
    assert np.all(np.isfinite(vals))
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0]) + 1e-12
    assert abs(vals[2] - vals[1]) < 1e-5 * vals[2]


def test_repeatable_bitwise():
    assert _threshold(_one, -0.01, 32) == _threshold(_one, -0.01, 32)


def test_monotone_in_z():
    itg = ThresholdIntegrator(_one, _u0, np.zeros(3), 0.0, 2 * np.eye(3), GridSpec(32), bandwidth=12.0)
    zs = [-3.0, -1.0, -0.3, -0.1, -0.01, -1e-4, -1e-6, 0.0]
    vals = [itg(z) for z in zs]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_errors():
    with pytest.raises(AboveThreshold):
        _threshold(_one, 0.1, 16)
    flat = ThresholdIntegrator(_one, _u0, np.zeros(3), 0.0, np.diag([2.0, 2.0, 0.0]), GridSpec(16))
    with pytest.raises(DegenerateMinimum):
        flat(0.0)
    assert np.isfinite(flat(-5.0))  # far below threshold the plain rule needs no Hessian


def test_off_centre_minimum(std):
    sym = build_symbol(std)
    p = np.array([1.0, -0.5, 2.0])
    u_p = lambda t: sym.u(p, t)  # noqa: E731
    umin = float(sym.u(p, (p / 2)[None])[0])
    h = sym.hess_qq(p, (p / 2)[None])[0]
    args = dict(q0=p / 2, umin=umin, hessian=h)
    ref = integrate_threshold(_one, u_p, umin - 0.5, GridSpec(128), method="plain", **args)
    got = integrate_threshold(_one, u_p, umin - 0.5, GridSpec(64), method="subtract", **args)
    assert got == pytest.approx(ref, rel=1e-8)
    a = integrate_threshold(_one, u_p, umin, GridSpec(64), **args)
    b = integrate_threshold(_one, u_p, umin, GridSpec(128), **args)
    assert a == pytest.approx(b, rel=1e-7)
