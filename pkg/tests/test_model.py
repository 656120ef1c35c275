from __future__ import annotations

import numpy as np
import pytest

from friedrichs import CallablePhi, ConstPhi, FourierPhi, ModelSpec, SinPhi, SymmetryViolation, build_symbol, cubic_nn
from friedrichs.model import check_evenness


def test_standard_symbol(std):
    sym = build_symbol(std)
    assert float(sym.u(np.zeros(3), np.zeros((1, 3)))[0]) == 0.0
    assert sym.m == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(sym.argmin, 0.0, atol=1e-8)


def test_u_at_zero_momentum_is_twice_eps(std, rng):
    sym = build_symbol(std)
    q = rng.uniform(-np.pi, np.pi, (100, 3))
    np.testing.assert_allclose(sym.u(np.zeros(3), q), 2 * cubic_nn()(q), atol=1e-14)


def test_symbol_even(std, rng):
    sym = build_symbol(std)
    assert check_evenness(sym.u, pairs=1000, tol=1e-12) <= 1e-12


def test_symbol_cached_across_mu(std):
    assert build_symbol(std) is build_symbol(std.with_mu(7.0))


def test_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec(phi=ConstPhi(), mu=0.0, dispersion=cubic_nn())
    with pytest.raises(ValueError):
        ModelSpec(phi=ConstPhi(), mu=1.0)
    with pytest.raises(SymmetryViolation):
        ModelSpec(phi=CallablePhi(lambda q: np.sin(q[..., 0]), "even"), mu=1.0, dispersion=cubic_nn())
    with pytest.raises(SymmetryViolation):
        ModelSpec(phi=CallablePhi(lambda q: 1 + np.sin(q[..., 0]), "odd"), mu=1.0, dispersion=cubic_nn())
    ModelSpec(phi=SinPhi(2), mu=1.0, dispersion=cubic_nn())


def test_fourier_phi_parity():
    assert FourierPhi((((1, 0, 0), 1.0, 0.0),)).parity == "even"
    assert FourierPhi((((1, 0, 0), 0.0, 1.0),)).parity == "odd"
    with pytest.raises(ValueError):
        FourierPhi((((1, 0, 0), 1.0, 0.0), ((0, 1, 0), 0.0, 1.0)))


def test_black_box_rejects_non_even():
    def u(p, q):
        return 3 - np.cos(q).sum(-1) + 0.1 * np.sin(q[..., 0])

    with pytest.raises(SymmetryViolation):
        build_symbol(ModelSpec(phi=ConstPhi(), mu=1.0, symbol=u))


def test_black_box_derivatives_match_analytic(std, rng):
    eps = cubic_nn()

    def u(p, q):
        p = np.asarray(p)
        return eps(p) + eps(p - q) + eps(q)

    bb = build_symbol(ModelSpec(phi=ConstPhi(), mu=1.0, symbol=u))
    an = build_symbol(std)
    for _ in range(3):
        p, q = rng.uniform(-2, 2, (2, 3))
        np.testing.assert_allclose(bb.grad_q(p, q[None])[0], an.grad_q(p, q[None])[0], atol=1e-9)
        np.testing.assert_allclose(bb.hess_qq(p, q[None])[0], an.hess_qq(p, q[None])[0], atol=1e-7)
        for a, b in zip(bb.blocks(p, q), an.blocks(p, q)):
            np.testing.assert_allclose(a, b, atol=1e-7)


def test_analytic_derivatives_step_halving(std, rng):
    sym = build_symbol(std)
    p, q = rng.uniform(-2, 2, (2, 3))
    errs = []
    for h in (1e-2, 5e-3):
        g = np.array([(sym.u(p, (q + h * e)[None])[0] - sym.u(p, (q - h * e)[None])[0]) / (2 * h) for e in np.eye(3)])
        errs.append(np.abs(g - sym.grad_q(p, q[None])[0]).max())
    assert errs[1] < errs[0] / 3.0
