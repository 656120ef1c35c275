from __future__ import annotations

import numpy as np
import pytest

from friedrichs import GridSpec, discretize, find_eigenvalue, lowest_eigenvalue
from friedrichs.oracle import dense_lowest_eigenvalue


def test_weights(std):
    dm = discretize(std, np.zeros(3), 8)
    assert np.all(dm.weights > 0) and dm.weights.sum() == pytest.approx((2 * np.pi) ** 3)


def test_tiny_coupling_returns_band_edge(std):
    dm = discretize(std, (0.5, 0.5, 0.5), 16)
    assert lowest_eigenvalue(dm, 1e-300) == pytest.approx(dm.diag.min(), abs=1e-12)


def test_against_dense_matrix(std, mu_c, rng):
    for _ in range(3):
        p = rng.uniform(-np.pi, np.pi, 3)
        dm = discretize(std, p, 8)
        for f in (0.5, 1.0, 3.0):
            assert lowest_eigenvalue(dm, f * mu_c) == pytest.approx(dense_lowest_eigenvalue(dm, f * mu_c), abs=1e-10)


def test_matches_spectrum_on_shared_grid(resonant, rng):
    for _ in range(3):
        p = rng.uniform(-np.pi, np.pi, 3)
        mu = resonant.mu * rng.uniform(2, 4)
        r = find_eigenvalue(resonant, p, GridSpec(32), mu=mu)
        assert r.exists
        assert abs(r.e - lowest_eigenvalue(discretize(resonant, p, 32), mu)) <= 1e-10


def test_decreasing_in_mu(resonant):
    dm = discretize(resonant, (0.3, -0.2, 1.0), 16)
    roots = [lowest_eigenvalue(dm, f * resonant.mu) for f in (1, 1.5, 2, 4, 8)]
    assert all(a > b for a, b in zip(roots, roots[1:]))


def test_refinement(resonant):
    a = lowest_eigenvalue(discretize(resonant, np.zeros(3), 64), 2 * resonant.mu)
    b = lowest_eigenvalue(discretize(resonant, np.zeros(3), 128), 2 * resonant.mu)
    assert abs(a - b) < 1e-3 and a < 0 and b < 0


def test_rejects_nonpositive_mu(std):
    with pytest.raises(ValueError):
        lowest_eigenvalue(discretize(std, np.zeros(3), 8), 0.0)
