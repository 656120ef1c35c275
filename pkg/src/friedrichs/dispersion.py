"""Dispersion relations on the 3-torus as finite cosine sums.

A dispersion is stored through its Levy-Khinchin coefficients::

    eps(q) = eps(0) + sum_s (cos<q, s> - 1) * c(s),    s in Z^3 \\ {0}

with ``c(s) == c(-s)``.  Only one representative of each ``{s, -s}`` pair is
kept internally; its weight is doubled when the sum is evaluated.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "wrap",
    "torus_point",
    "Dispersion",
    "CndReport",
    "cubic_nn",
    "eval_dispersion",
    "check_cnd",
    "PRESETS",
]

TWO_PI = 2.0 * np.pi

Site = Tuple[int, int, int]


def wrap(x):
    """Reduce coordinates into the cell (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    y = np.mod(x + np.pi, TWO_PI) - np.pi
    # np.mod maps +pi to -pi; the cell is half-open on the left
    return np.where(y == -np.pi, np.pi, y)


def torus_point(x) -> np.ndarray:
    """Return ``x`` as a length-3 float array reduced into (-pi, pi]^3."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (3,):
        raise ValueError(f"a torus point has three coordinates, got shape {x.shape}")
    return wrap(x)


def _canonical(site: Sequence[int]) -> Site:
    s = tuple(int(v) for v in site)
    if len(s) != 3:
        raise ValueError(f"lattice site must have three integer components, got {site!r}")
    neg = tuple(-v for v in s)
    return max(s, neg)


@dataclass(frozen=True)
class Dispersion:
    """Even real dispersion given by finitely many Fourier cosine coefficients.

    Parameters
    ----------
    coefficients : tuple of (site, value)
        One entry per ``{s, -s}`` pair; ``site`` is the lexicographically
        larger representative.  Use :meth:`from_mapping` to build from a
        user-supplied map.
    constant : float
        The value ``eps(0)``.
    """

    coefficients: Tuple[Tuple[Site, float], ...]
    constant: float = 0.0
    _sites: np.ndarray = field(init=False, repr=False, compare=False, hash=False)
    _weights: np.ndarray = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        sites = np.array([s for s, _ in self.coefficients], dtype=float).reshape(-1, 3)
        weights = np.array([2.0 * c for _, c in self.coefficients], dtype=float)
        object.__setattr__(self, "_sites", sites)
        object.__setattr__(self, "_weights", weights)

    @classmethod
    def from_mapping(cls, coeffs: Mapping[Sequence[int], float], constant: float = 0.0) -> "Dispersion":
        """Build from ``{site: value}``; listing both ``s`` and ``-s`` is allowed
        only when the two values agree."""
        merged = {}
        for site, value in coeffs.items():
            key = _canonical(site)
            if key == (0, 0, 0):
                raise ValueError("the origin carries no coefficient; use `constant`")
            value = float(value)
            if key in merged and merged[key] != value:
                raise ValueError(
                    f"coefficients at {key} and its negative differ ({merged[key]} vs {value}); "
                    "only even dispersions are supported"
                )
            merged[key] = value
        items = tuple(sorted(merged.items()))
        return cls(items, float(constant))

    @property
    def sites(self) -> np.ndarray:
        return self._sites

    def full_support(self) -> dict:
        """Return the symmetric map ``{s: c(s)}`` including both signs."""
        out = {}
        for s, c in self.coefficients:
            out[s] = c
            out[tuple(-v for v in s)] = c
        return out

    def __call__(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if not self.coefficients:
            return np.full(q.shape[:-1], self.constant)
        phase = q @ self._sites.T
        # cos x - 1 = -2 sin^2(x/2) avoids cancellation near the minimum
        return self.constant - 2.0 * (np.sin(0.5 * phase) ** 2) @ self._weights

    def gradient(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if not self.coefficients:
            return np.zeros(q.shape)
        phase = q @ self._sites.T
        return -(np.sin(phase) * self._weights) @ self._sites

    def hessian(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if not self.coefficients:
            return np.zeros(q.shape + (3,))
        phase = q @ self._sites.T
        c = np.cos(phase) * self._weights
        return -np.einsum("...k,ki,kj->...ij", c, self._sites, self._sites)


def cubic_nn() -> Dispersion:
    """Nearest-neighbour dispersion ``3 - cos q1 - cos q2 - cos q3``."""
    return Dispersion.from_mapping({(1, 0, 0): -0.5, (0, 1, 0): -0.5, (0, 0, 1): -0.5})


PRESETS = {"cubic-nn": cubic_nn}


def eval_dispersion(d: Dispersion, q) -> np.ndarray:
    """Evaluate ``eps(q)``; ``q`` may carry leading batch axes."""
    return d(q)


@dataclass(frozen=True)
class CndReport:
    passed: bool
    violating_site: Optional[Site]
    worst_matrix_eigenvalue: float
    tolerance: float = 1e-10


def check_cnd(
    d: Dispersion,
    trials: int = 100,
    max_points: int = 6,
    tol: float = 1e-10,
    seed: Optional[int] = 0,
) -> CndReport:
    """Check conditional negative definiteness of a dispersion.

    Two independent tests run: every off-origin coefficient must be
    non-positive, and for ``trials`` random point sets ``p_1..p_n``
    (``2 <= n <= max_points``) the matrix ``eps(p_i - p_j)`` restricted to the
    hyperplane ``sum z_i = 0`` must have no eigenvalue above ``tol``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    violating = None
    for s, c in d.coefficients:
        if c > 0.0:
            violating = s
            break

    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(trials):
        n = int(rng.integers(2, max_points + 1))
        pts = rng.uniform(-np.pi, np.pi, size=(n, 3))
        gram = d(pts[:, None, :] - pts[None, :, :])
        gram = 0.5 * (gram + gram.T)
        # orthonormal basis of {z : sum z = 0}
        basis = np.linalg.qr(np.eye(n) - 1.0 / n)[0][:, : n - 1]
        restricted = basis.T @ gram @ basis
        worst = max(worst, float(np.linalg.eigvalsh(restricted).max()))

    passed = violating is None and worst <= tol
    return CndReport(passed, violating, worst, tol)


def parse_site_line(text: str) -> Tuple[Site, float]:
    """Parse ``site = s1 s2 s3, coeff = value`` into ``((s1, s2, s3), value)``."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ValueError("expected `site = s1 s2 s3, coeff = value`")
    fields = {}
    for part in parts:
        if "=" not in part:
            raise ValueError(f"missing '=' in {part!r}")
        k, v = (x.strip() for x in part.split("=", 1))
        fields[k] = v
    if set(fields) != {"site", "coeff"}:
        raise ValueError(f"expected keys `site` and `coeff`, got {sorted(fields)}")
    comps = fields["site"].split()
    if len(comps) != 3:
        raise ValueError("site needs three integers")
    try:
        site = tuple(int(c) for c in comps)
    except ValueError as exc:
        raise ValueError(f"site components must be integers: {fields['site']!r}") from exc
    if site == (0, 0, 0):
        raise ValueError("the origin carries the constant, not a coefficient")
    return site, float(fields["coeff"])


def dispersion_from_lines(lines: Iterable[str], constant: float = 0.0) -> Dispersion:
    coeffs = {}
    for line in lines:
        site, value = parse_site_line(line)
        key = _canonical(site)
        if key in coeffs and coeffs[key] != value:
            raise ValueError(f"conflicting coefficients for site {site}")
        coeffs[key] = value
    return Dispersion.from_mapping(coeffs, constant)
