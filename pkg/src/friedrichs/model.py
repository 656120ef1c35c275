"""Form factors, model descriptions, and the symbol ``u(p, q)``."""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np

from ._newton import newton_minimize
from .dispersion import Dispersion, wrap
from .errors import SymmetryViolation

__all__ = [
    "ConstPhi",
    "SinPhi",
    "FourierPhi",
    "CallablePhi",
    "ModelSpec",
    "Symbol",
    "build_symbol",
    "standard_model",
    "check_parity",
    "check_evenness",
]

PARITY_TOL = 1e-10
PARITY_GRID = 17


@dataclass(frozen=True)
class ConstPhi:
    """Constant form factor ``phi(q) = c``."""

    c: float = 1.0
    parity = "even"

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        return np.full(q.shape[:-1], float(self.c))

    def describe(self) -> str:
        return f"const {self.c!r}"


@dataclass(frozen=True)
class SinPhi:
    """``phi(q) = amplitude * sin(q_k)`` with ``k`` in 1..3."""

    k: int = 1
    amplitude: float = 1.0
    parity = "odd"

    def __post_init__(self):
        if self.k not in (1, 2, 3):
            raise ValueError(f"sin component must be 1, 2 or 3, got {self.k}")

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        return self.amplitude * np.sin(q[..., self.k - 1])

    def describe(self) -> str:
        return f"sin {self.k}" if self.amplitude == 1.0 else f"sin {self.k} * {self.amplitude!r}"


@dataclass(frozen=True)
class FourierPhi:
    """Trigonometric polynomial ``sum a_s cos<q,s> + b_s sin<q,s>``.

    ``modes`` holds ``((s1, s2, s3), a, b)`` triples.  The parity is even
    when every ``b`` vanishes and odd when every ``a`` vanishes; mixed tables
    are rejected because the theory needs a definite parity.
    """

    modes: Tuple[Tuple[Tuple[int, int, int], float, float], ...]

    def __post_init__(self):
        if not self.modes:
            raise ValueError("a Fourier table needs at least one mode")
        has_cos = any(a != 0.0 for _, a, _ in self.modes)
        has_sin = any(b != 0.0 for _, _, b in self.modes)
        if has_cos and has_sin:
            raise ValueError("Fourier table mixes cosine and sine terms; phi must be even or odd")

    @property
    def parity(self) -> str:
        return "odd" if any(b != 0.0 for _, _, b in self.modes) else "even"

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        sites = np.array([s for s, _, _ in self.modes], dtype=float)
        a = np.array([m[1] for m in self.modes])
        b = np.array([m[2] for m in self.modes])
        phase = q @ sites.T
        return np.cos(phase) @ a + np.sin(phase) @ b

    def describe(self) -> str:
        return "table " + "; ".join(f"{s[0]} {s[1]} {s[2]} {a!r} {b!r}" for s, a, b in self.modes)


@dataclass(frozen=True)
class CallablePhi:
    """Wrap a user function ``func(q) -> values`` with a declared parity."""

    func: Callable
    parity: str = "even"

    def __call__(self, q):
        return np.asarray(self.func(np.asarray(q, dtype=float)), dtype=float)

    def describe(self) -> str:
        return f"callable {getattr(self.func, '__name__', 'phi')} ({self.parity})"


def _test_grid(n=PARITY_GRID):
    t = -np.pi + 2.0 * np.pi * (np.arange(n) + 0.5) / n
    return np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=-1).reshape(-1, 3)


def check_parity(phi, tol=PARITY_TOL) -> float:
    """Return the parity defect of ``phi`` on the test grid; raise if above ``tol``."""
    if phi.parity not in ("even", "odd"):
        raise SymmetryViolation(f"phi parity must be 'even' or 'odd', got {phi.parity!r}")
    q = _test_grid()
    sign = 1.0 if phi.parity == "even" else -1.0
    defect = float(np.max(np.abs(phi(q) - sign * phi(-q))))
    if defect >= tol:
        raise SymmetryViolation(f"phi declared {phi.parity} but |phi(q) -/+ phi(-q)| reaches {defect:.3e}")
    return defect


def check_evenness(u, pairs=1000, tol=1e-12, seed=12345) -> float:
    """Evenness defect ``max |u(p,q) - u(-p,-q)|`` over random pairs."""
    rng = np.random.default_rng(seed)
    p = rng.uniform(-np.pi, np.pi, size=(pairs, 3))
    q = rng.uniform(-np.pi, np.pi, size=(pairs, 3))
    defect = max(abs(float(u(pi, qi[None, :])[0] - u(-pi, -qi[None, :])[0])) for pi, qi in zip(p, q))
    scale = max(1.0, max(abs(float(u(pi, qi[None, :])[0])) for pi, qi in zip(p[:20], q[:20])))
    if defect > tol * scale:
        raise SymmetryViolation(f"u(p,q) != u(-p,-q): defect {defect:.3e}")
    return defect


@dataclass(frozen=True)
class ModelSpec:
    """The family ``h_mu(p) = h_0(p) - mu v``.

    Exactly one of ``dispersion`` or ``symbol`` is given.  With a dispersion
    the symbol is ``eps(p) + eps(p - q) + eps(q)``; ``symbol`` is a black-box
    ``u(p, q)`` taking ``p`` of shape (3,) and ``q`` of shape (..., 3), whose
    derivatives are taken by finite differences.
    """

    phi: object
    mu: float
    dispersion: Optional[Dispersion] = None
    symbol: Optional[Callable] = None
    smoothness: int = 3

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if (self.dispersion is None) == (self.symbol is None):
            raise ValueError("give exactly one of `dispersion` or `symbol`")
        check_parity(self.phi)

    def with_mu(self, mu: float) -> "ModelSpec":
        return replace(self, mu=float(mu))


def standard_model(mu: float = 1.0, phi=None) -> ModelSpec:
    """Nearest-neighbour dispersion with the given form factor (default 1)."""
    from .dispersion import cubic_nn

    return ModelSpec(phi=ConstPhi(1.0) if phi is None else phi, mu=mu, dispersion=cubic_nn())


class Symbol:
    """Evaluator for ``u(p, q)`` and its first and second partial derivatives.

    All methods take ``p`` of shape (3,) and ``q`` of shape (..., 3).
    """

    def __init__(self):
        self._m = None
        self._argmin = None

    def u(self, p, q):
        raise NotImplementedError

    def grad_q(self, p, q):
        raise NotImplementedError

    def hess_qq(self, p, q):
        raise NotImplementedError

    def blocks(self, p, q):
        """Return the second-derivative blocks ``(pp, pq, qq)`` at one point."""
        raise NotImplementedError

    def gradient_pq(self, p, q):
        """Full gradient with respect to ``(p, q)`` at one point."""
        raise NotImplementedError

    @property
    def m(self) -> float:
        """Global minimum of ``u`` over the 6-torus (computed once)."""
        if self._m is None:
            self._m, self._argmin = self._global_min()
        return self._m

    @property
    def argmin(self) -> np.ndarray:
        self.m
        return self._argmin

    def _global_min(self, n=8, seeds=6):
        t = -np.pi + 2.0 * np.pi * np.arange(n) / n
        axes = np.meshgrid(*([t] * 6), indexing="ij")
        pts = np.stack(axes, axis=-1).reshape(-1, 6)
        vals = np.concatenate(
            [self.u(pp, pts[i * n**3 : (i + 1) * n**3, 3:]) for i, pp in enumerate(pts[:: n**3, :3])]
        )
        order = np.lexsort((np.linalg.norm(pts, axis=1), vals))
        starts = [np.zeros(6)] + [pts[i] for i in order[:seeds]]

        def f(x):
            return float(self.u(x[:3], x[None, 3:])[0])

        def g(x):
            return self.gradient_pq(x[:3], x[3:])

        def h(x):
            pp, pq, qq = self.blocks(x[:3], x[3:])
            return np.block([[pp, pq], [pq.T, qq]])

        best = None
        for x0 in starts:
            x, _, _ = newton_minimize(f, g, h, x0, gtol=1e-12)
            x = wrap(x)
            val = f(x)
            key = (val, float(np.linalg.norm(x)))
            if best is None or key[0] < best[0][0] - 1e-13 or (abs(key[0] - best[0][0]) <= 1e-13 and key[1] < best[0][1]):
                best = (key, x)
        return best[0][0], best[1]


class DispersionSymbol(Symbol):
    """``u(p,q) = eps(p) + eps(p-q) + eps(q)`` with closed-form derivatives."""

    def __init__(self, dispersion: Dispersion):
        super().__init__()
        self.eps = dispersion

    def u(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        return self.eps(p) + self.eps(p - q) + self.eps(q)

    def grad_q(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        return self.eps.gradient(q) - self.eps.gradient(p - q)

    def grad_p(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        return self.eps.gradient(p) + self.eps.gradient(p - q)

    def gradient_pq(self, p, q):
        return np.concatenate([self.grad_p(p, q), self.grad_q(p, q)])

    def hess_qq(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        return self.eps.hessian(q) + self.eps.hessian(p - q)

    def blocks(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        hpq = self.eps.hessian(p - q)
        return self.eps.hessian(p) + hpq, -hpq, self.eps.hessian(q) + hpq


_FD_H1 = 1e-3
_FD_H2 = 1e-3


def _fd_gradient(f, x, h=_FD_H1):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)
    return g


def _fd_hessian(f, x, h=_FD_H2):
    x = np.asarray(x, dtype=float)
    d = x.size
    H = np.empty((d, d))
    # fourth-order stencils: diagonal from the 5-point rule, mixed from 4 corners
    # of two step sizes combined by Richardson extrapolation
    f0 = f(x)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        H[i, i] = (-f(x + 2 * e) + 16 * f(x + e) - 30 * f0 + 16 * f(x - e) - f(x - 2 * e)) / (12 * h * h)
    for i in range(d):
        for j in range(i + 1, d):
            def mixed(s):
                ei = np.zeros(d)
                ej = np.zeros(d)
                ei[i] = s
                ej[j] = s
                return (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * s * s)

            H[i, j] = H[j, i] = (4 * mixed(h) - mixed(2 * h)) / 3
    return H


class BlackBoxSymbol(Symbol):
    """User-supplied ``u(p, q)``; derivatives by fourth-order central differences."""

    def __init__(self, func: Callable):
        super().__init__()
        self._u = func
        check_evenness(self.u)

    def u(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        return np.asarray(self._u(p, q), dtype=float)

    def _f6(self, x):
        return float(self.u(x[:3], x[None, 3:])[0])

    def grad_q(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        flat = q.reshape(-1, 3)
        out = np.array([_fd_gradient(lambda y: self._f6(np.concatenate([p, y])), qi) for qi in flat])
        return out.reshape(q.shape)

    def gradient_pq(self, p, q):
        return _fd_gradient(self._f6, np.concatenate([p, q]))

    def hess_qq(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        flat = q.reshape(-1, 3)
        out = np.array([_fd_hessian(lambda y: self._f6(np.concatenate([p, y])), qi) for qi in flat])
        return out.reshape(q.shape + (3,))

    def blocks(self, p, q):
        H = _fd_hessian(self._f6, np.concatenate([np.asarray(p, float), np.asarray(q, float)]))
        return H[:3, :3], H[:3, 3:], H[3:, 3:]


@lru_cache(maxsize=64)
def _symbol(dispersion, func) -> Symbol:
    if dispersion is not None:
        return DispersionSymbol(dispersion)
    return BlackBoxSymbol(func)


def build_symbol(spec: ModelSpec) -> Symbol:
    """Return the (cached) symbol evaluator for ``spec``.

    The symbol does not depend on ``mu`` or ``phi``, so specs differing only
    in those share one evaluator.  The global minimum ``m`` is computed on
    first access of ``Symbol.m``; evenness of a black-box symbol is verified
    on construction.
    """
    return _symbol(spec.dispersion, spec.symbol)
