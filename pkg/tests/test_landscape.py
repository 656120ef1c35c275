from __future__ import annotations

import numpy as np
import pytest

from friedrichs import (
    ConstPhi,
    DegenerateMinimum,
    Dispersion,
    ModelSpec,
    StructureViolation,
    build_symbol,
    fit_umin_expansion,
    hessian_data,
    maximize_q,
    minimize_q,
    validated_radius,
)
from friedrichs.landscape import LANDSCAPE_COLUMNS, landscape_rows, lattice_directions


def _eps(q):
    return 3 - np.cos(q).sum(-1)


def test_origin(std):
    info = minimize_q(std, np.zeros(3))
    np.testing.assert_allclose(info.q0, 0.0, atol=1e-12)
    assert info.umin == pytest.approx(0.0, abs=1e-15) and info.nondegenerate


def test_half_momentum_law(std):
    p = np.array([0.6, -0.4, 0.2])
    info = minimize_q(std, p)
    np.testing.assert_allclose(info.q0, p / 2, atol=1e-12)
    assert info.umin == pytest.approx(_eps(p) + 2 * _eps(p / 2), abs=1e-14)
    assert info.grad_norm <= 1e-10


def test_odd_and_even(std, rng):
    for p in rng.uniform(-np.pi, np.pi, (50, 3)):
        a, b = minimize_q(std, p), minimize_q(std, -p)
        np.testing.assert_allclose(a.q0, -b.q0, atol=1e-10)
        assert a.umin == pytest.approx(b.umin, abs=1e-10)
        assert maximize_q(std, p) == pytest.approx(maximize_q(std, -p), abs=1e-10)


def test_band_edges_bracket_samples(std, rng):
    sym = build_symbol(std)
    for p in rng.uniform(-np.pi, np.pi, (10, 3)):
        q = rng.uniform(-np.pi, np.pi, (500, 3))
        u = sym.u(p, q)
        assert u.min() >= minimize_q(std, p).umin - 1e-12
        assert u.max() <= maximize_q(std, p) + 1e-12


def test_max_at_zero(std):
    assert maximize_q(std, np.zeros(3)) == pytest.approx(12.0, abs=1e-12)


def test_corner_band_matches_dense_scan(std):
    p = np.array([np.pi] * 3)
    t = -np.pi + 2 * np.pi * np.arange(64) / 64
    grid = np.stack(np.meshgrid(t, t, t, indexing="ij"), -1).reshape(-1, 3)
    u = build_symbol(std).u(p, grid)
    info = minimize_q(std, p, strict=False)
    assert not info.nondegenerate
    assert maximize_q(std, p) - info.umin == pytest.approx(u.max() - u.min(), abs=1e-12)
    with pytest.raises(DegenerateMinimum):
        minimize_q(std, p)


def test_hessian_blocks(std):
    hd = hessian_data(std)
    np.testing.assert_allclose(hd.U, np.eye(3), atol=1e-14)
    assert (hd.l1, hd.l, hd.l2) == pytest.approx((2.0, -1.0, 2.0), abs=1e-14)
    assert hd.l1 * hd.l2 - hd.l**2 == pytest.approx(3.0)
    fd = hessian_data(std, method="fd")
    assert (fd.l1, fd.l, fd.l2) == pytest.approx((hd.l1, hd.l, hd.l2), abs=1e-6)


def test_single_dispersion_structure():
    d = Dispersion.from_mapping({(1, 0, 0): -0.7, (0, 1, 0): -0.4, (0, 0, 1): -1.1, (1, 1, 0): -0.2})
    hd = hessian_data(ModelSpec(phi=ConstPhi(), mu=1.0, dispersion=d))
    assert hd.l1 == pytest.approx(hd.l2) and hd.l1 == pytest.approx(-2 * hd.l)
    assert np.linalg.det(hd.U) == pytest.approx(1.0)


def test_non_proportional_blocks_rejected():
    def u(p, q):
        p = np.asarray(p)
        return _eps(q) + _eps(p - q) + 0.5 * (1 - np.cos(p[..., 0])) + _eps(p)

    with pytest.raises(StructureViolation):
        hessian_data(ModelSpec(phi=ConstPhi(), mu=1.0, symbol=u))


def test_umin_expansion(std):
    ex = fit_umin_expansion(std)
    assert ex.coefficient == pytest.approx(0.75, rel=1e-6)
    np.testing.assert_allclose(ex.Q, ex.Q.T, atol=1e-12)
    assert np.linalg.eigvalsh(ex.Q).min() > 0
    np.testing.assert_allclose(ex.Q_schur, 0.75 * np.eye(3), atol=1e-12)
    np.testing.assert_allclose(ex.Q_composed, 0.75 * np.eye(3), atol=1e-6)
    assert ex.residual_exponent > 2
    assert ex.matches == ("(l1 l2-l^2)/(2 l2)",)
    assert ex.slope_scalar == pytest.approx(0.5, rel=1e-8) and ex.slope_matches == ("-l/l2",)


def test_validated_radius(std):
    assert validated_radius(std, radii=(0.25, 0.5, 1.0)) == 1.0


def test_lattice_directions():
    d = lattice_directions()
    assert d.shape == (13, 3)
    np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0)


def test_landscape_rows(std):
    rows = landscape_rows(std, [np.zeros(3), np.array([1.0, 0, 0])])
    assert len(rows[0]) == len(LANDSCAPE_COLUMNS)
    assert rows[1][3:6] == pytest.approx((0.5, 0, 0)) and rows[0][7] == pytest.approx(12.0)
