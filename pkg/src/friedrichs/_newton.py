"""Damped (saddle-free) Newton iteration used by the minimizers."""
from __future__ import annotations

import numpy as np


def newton_minimize(f, grad, hess, x0, gtol=1e-12, maxiter=100, curvature_floor=1e-12):
    """Minimize ``f`` from ``x0``; returns ``(x, gradient_norm, iterations)``.

    Each step solves with ``|H|`` (absolute eigenvalues, floored) so that it is
    a descent direction even away from convex regions; an Armijo backtracking
    search runs until the gradient is small enough for pure Newton steps.
    """
    x = np.array(x0, dtype=float)
    gnorm = np.inf
    for it in range(maxiter):
        g = grad(x)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= gtol:
            return x, gnorm, it
        w, V = np.linalg.eigh(hess(x))
        scale = max(float(np.abs(w).max()), 1.0)
        w = np.maximum(np.abs(w), curvature_floor * scale)
        step = -V @ ((V.T @ g) / w)
        if gnorm > 1e-6:
            f0 = f(x)
            slope = float(g @ step)
            t = 1.0
            while t > 1e-12 and f(x + t * step) > f0 + 1e-4 * t * slope:
                t *= 0.5
            step = t * step
        if not np.all(np.isfinite(step)) or np.linalg.norm(step) < 1e-16 * max(1.0, np.linalg.norm(x)):
            break
        x = x + step
    g = grad(x)
    return x, float(np.linalg.norm(g)), maxiter
