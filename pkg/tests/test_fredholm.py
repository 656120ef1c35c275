from __future__ import annotations

import numpy as np
import pytest

from friedrichs import (
    AboveThreshold,
    ConstPhi,
    Dispersion,
    GridSpec,
    InfiniteLambda,
    ModelSpec,
    SinPhi,
    bs_eigenvalue,
    fredholm_det,
    lambda_fn,
    minimize_q,
    mu0,
    standard_model,
)

from conftest import LAMBDA00


def test_lambda_at_threshold(std):
    a = lambda_fn(std, np.zeros(3), 0.0, GridSpec(64))
    b = lambda_fn(std, np.zeros(3), 0.0, GridSpec(128))
    assert abs(a - b) <= 1e-5 * b
    assert b == pytest.approx(LAMBDA00, rel=1e-5)
    assert b == pytest.approx(62.69, abs=5e-3)


def test_mu0_value(mu_c):
    assert mu_c == pytest.approx(1 / LAMBDA00, rel=1e-5)
    assert mu_c == pytest.approx(0.01595, abs=1e-5)


def test_mu0_scaling():
    base = mu0(standard_model(), GridSpec(32))
    assert mu0(standard_model(phi=ConstPhi(3.0)), GridSpec(32)) == pytest.approx(base / 9, rel=1e-12)


def test_mu0_odd_form_factor():
    a = mu0(standard_model(phi=SinPhi(1)), GridSpec(32))
    b = mu0(standard_model(phi=SinPhi(1)), GridSpec(64))
    assert np.isfinite(a) and a > 0 and a == pytest.approx(b, rel=1e-6)


def test_mu0_diverges_for_degenerate_minimum():
    flat = Dispersion.from_mapping({(1, 0, 0): -0.5})
    with pytest.raises(InfiniteLambda):
        mu0(ModelSpec(phi=ConstPhi(), mu=1.0, dispersion=flat), GridSpec(32))


def test_lambda_monotone_and_bounded(std, rng):
    for p in rng.uniform(-np.pi, np.pi, (3, 3)):
        umin = minimize_q(std, p).umin
        zs = np.sort(umin - np.array([5.0, 1.0, 0.2, 1e-3, 0.0]))
        vals = [lambda_fn(std, p, z, GridSpec(32)) for z in zs]
        assert all(a < b for a, b in zip(vals, vals[1:]))
        assert lambda_fn(std, p, -1e6, GridSpec(32)) < (2 * np.pi) ** 3 / 1e6


def test_determinant_basics(resonant, std, mu_c):
    p = np.array([0.4, -1.0, 2.0])
    assert fredholm_det(resonant, p, -3.0, mu=0.0).value == 1.0
    d = fredholm_det(resonant, np.zeros(3), 0.0)
    assert abs(d.value) <= 1e-6 and d.at_threshold
    assert not fredholm_det(resonant, p, -3.0).at_threshold
    assert abs(fredholm_det(resonant, p, -1e6).value - 1) < 1e-3
    assert fredholm_det(std.with_mu(0.9 * mu_c), np.zeros(3), 0.0).value > 0
    assert fredholm_det(std.with_mu(1.1 * mu_c), np.zeros(3), 0.0).value < 0


def test_determinant_decreasing_and_even(resonant, rng):
    for p in rng.uniform(-np.pi, np.pi, (3, 3)):
        umin = minimize_q(resonant, p).umin
        vals = [fredholm_det(resonant, p, z, GridSpec(32)).value for z in (umin - 4, umin - 1, umin - 1e-2)]
        assert vals[0] > vals[1] > vals[2]
        a = fredholm_det(resonant, p, umin - 0.3, GridSpec(32)).value
        b = fredholm_det(resonant, -p, umin - 0.3, GridSpec(32)).value
        assert a == pytest.approx(b, abs=1e-12)


def test_birman_schwinger(resonant):
    p, z = np.array([0.3, 0.2, -0.1]), -0.7
    ev = bs_eigenvalue(resonant, p, z)
    assert ev == pytest.approx(1 - fredholm_det(resonant, p, z).value, abs=1e-15)
    assert bs_eigenvalue(resonant.with_mu(2 * resonant.mu), p, z) == pytest.approx(2 * ev, rel=1e-14)
    assert bs_eigenvalue(resonant, np.zeros(3), -1e-12) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(AboveThreshold):
        bs_eigenvalue(resonant, np.zeros(3), 0.0)
    with pytest.raises(AboveThreshold):
        lambda_fn(resonant, np.zeros(3), 0.5)
