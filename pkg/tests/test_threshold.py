from __future__ import annotations

import numpy as np
import pytest

from friedrichs import GridSpec, classify_threshold, find_eigenvalue, fit_threshold_expansion, fredholm_det, minimize_q
from friedrichs.threshold import (
    cell_centred_grid,
    radial_slope_oracle,
    resonance_norms,
    threshold_inequality_report,
    verify_assumption_lambda,
)


def test_classification(resonant, odd_critical):
    res = classify_threshold(resonant)
    assert res.kind == "Resonance" and res.l2_diverges and res.l1_change < 0.05
    assert res.l2_growth == pytest.approx(0.5, abs=0.1)
    eig = classify_threshold(odd_critical)
    assert eig.kind == "ThresholdEigenvalue" and eig.l2_stable
    sub = classify_threshold(resonant.with_mu(resonant.mu / 2))
    assert sub.kind == "Subcritical" and sub.det_at_threshold == pytest.approx(0.5, abs=1e-6)
    reg = classify_threshold(resonant.with_mu(2 * resonant.mu), norm_grids=())
    assert reg.kind == "Regular" and reg.norms == ()


def test_norm_skips_singular_node(resonant):
    norms = resonance_norms(resonant, (8,))
    assert np.isfinite(norms[0][1]) and np.isfinite(norms[0][2])


def test_radial_oracle(resonant):
    assert radial_slope_oracle(resonant) == pytest.approx(2 * np.pi**2 * resonant.mu, rel=1e-12)


def test_expansion_resonance(resonant):
    fit = fit_threshold_expansion(resonant)
    assert fit.a0 == pytest.approx(0.0, abs=1e-8)
    assert fit.a1 == pytest.approx(fit.a1_oracle, rel=1e-2) and fit.a1 >= 0
    assert fit.matches == ("4*sqrt(2)*pi^2 form",)
    assert fit.residual_exponent > 1.3
    half = fit_threshold_expansion(resonant.with_mu(resonant.mu / 2))
    assert half.a1 == pytest.approx(fit.a1 / 2, rel=1e-9)


def test_expansion_threshold_eigenvalue(odd_critical):
    fit = fit_threshold_expansion(odd_critical)
    assert abs(fit.a1) < 1e-2 * fit.a2
    assert fit.residual_exponent > 1.3
    assert fit.a1_theory_candidates["4*sqrt(2)*pi^2 form"] == 0.0


def test_expansion_validates_samples(resonant):
    with pytest.raises(ValueError):
        fit_threshold_expansion(resonant, w_samples=[0.1, 0.0])


def test_expansion_predicts_root(resonant):
    fit = fit_threshold_expansion(resonant)
    for p in (np.array([0.05, 0, 0]), np.array([0.02, 0.02, -0.02])):
        r = find_eigenvalue(resonant, p)
        umin = minimize_q(resonant, p).umin
        predicted = (r.det_at_band_edge / fit.a1) ** 2
        assert umin - r.e == pytest.approx(predicted, rel=0.1)


def test_assumption_lambda(resonant):
    pts = cell_centred_grid(5)
    a = verify_assumption_lambda(resonant, pts, delta=1.0, radii=[0.1, 0.4, 1.0])
    assert a.passed_i and a.min_margin_i > 0 and a.passed_ii and a.c_quadratic > 0 and a.c_dispersion > 0
    b = verify_assumption_lambda(resonant, pts, delta=1.0, radii=[0.1, 0.4, 1.0], grid=GridSpec(32))
    assert b.c_quadratic == pytest.approx(a.c_quadratic, rel=0.05)
    zero = verify_assumption_lambda(resonant, [[0.0, 0.0, 0.0]], delta=1.0, radii=[])
    assert zero.points_i == 0 and zero.points_ii == 0


def test_inequality_symmetry(resonant):
    p = np.array([0.3, -0.1, 0.2])
    assert fredholm_det(resonant, p, 0.0).value == pytest.approx(fredholm_det(resonant, -p, 0.0).value, abs=1e-12)


def test_inequalities(resonant, odd_critical):
    radii = np.logspace(-3, 0, 4)
    res = threshold_inequality_report(resonant, 1.0, cell_centred_grid(5), radii=radii)
    assert res.kind == "Resonance" and res.passed
    assert 0 < res.c1 <= res.c2 and res.band_ratio < 10 and res.complement_inf >= res.c1
    eig = threshold_inequality_report(odd_critical, 1.0, radii=radii)
    assert eig.kind == "ThresholdEigenvalue" and eig.c > 0 and eig.passed
    with pytest.raises(ValueError):
        threshold_inequality_report(resonant.with_mu(resonant.mu / 2), radii=radii)
