"""Grid, grid functions and the contact Hamiltonian ``h(x, p) + lam(x) u``.

Everything lives on the circle [0, 2*pi) with the flat metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, ModelError

TWO_PI = 2.0 * math.pi
MIN_NODES = 16

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# trigonometric coefficient tables


@dataclass(frozen=True)
class TrigPoly:
    """``sum_k cos_k cos(k x) + sin_k sin(k x)`` for k = 0, 1, ..."""

    cos: tuple = (0.0,)
    sin: tuple = (0.0,)

    def __post_init__(self):
        m = max(len(self.cos), len(self.sin), 1)
        object.__setattr__(self, "cos", tuple(float(v) for v in self.cos) + (0.0,) * (m - len(self.cos)))
        object.__setattr__(self, "sin", tuple(float(v) for v in self.sin) + (0.0,) * (m - len(self.sin)))

    @classmethod
    def constant(cls, value):
        return cls(cos=(float(value),))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.cos[0])
        for k in range(1, len(self.cos)):
            if self.cos[k]:
                out = out + self.cos[k] * np.cos(k * x)
            if self.sin[k]:
                out = out + self.sin[k] * np.sin(k * x)
        return out if out.ndim else float(out)

    def deriv(self, order=1):
        c, s = np.array(self.cos), np.array(self.sin)
        k = np.arange(len(c), dtype=float)
        for _ in range(order):
            c, s = k * s, -k * c
        return TrigPoly(tuple(c), tuple(s))

    def shifted(self, a):
        c = list(self.cos)
        c[0] += a
        return TrigPoly(tuple(c), self.sin)

    def scaled(self, a):
        return TrigPoly(tuple(a * v for v in self.cos), tuple(a * v for v in self.sin))

    def sup_abs(self, samples=4096):
        return float(np.max(np.abs(self(np.linspace(0.0, TWO_PI, samples, endpoint=False)))))

    def arrays(self):
        return np.array(self.cos), np.array(self.sin)


# ---------------------------------------------------------------------------
# grid and grid functions


@dataclass(frozen=True)
class PeriodicGrid:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < MIN_NODES:
            raise ConfigurationError(f"grid needs at least {MIN_NODES} nodes, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def dx(self):
        return TWO_PI / self.n

    @property
    def nodes(self):
        return np.arange(self.n) * self.dx

    def nearest_node(self, x):
        return int(np.rint(np.mod(x, TWO_PI) / self.dx)) % self.n


def make_grid(n):
    return PeriodicGrid(n)


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ConfigurationError(f"expected {self.grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("grid function has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid, fn):
        return cls(grid, np.asarray(fn(grid.nodes), dtype=float) * np.ones(grid.n))

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(grid.n, float(value)))

    def __call__(self, x):
        return interpolate(self, x)

    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    def lipschitz(self):
        v = self.values
        return float(np.max(np.abs(np.roll(v, -1) - v)) / self.grid.dx)

    def distance(self, other):
        return float(np.max(np.abs(self.values - other.values)))


def interpolate(f, x):
    """Piecewise-linear periodic interpolation; exact at nodes."""
    g = f.grid
    xa = np.asarray(x, dtype=float)
    s = np.mod(xa, TWO_PI) / g.dx
    i = np.floor(s)
    w = s - i
    # x + 2*pi loses a few ulps; snap those back onto the node
    near = np.abs(w - np.rint(w)) < 1e-9
    i = np.where(near, np.rint(s), i)
    w = np.where(near, 0.0, w)
    i = i.astype(np.int64) % g.n
    v = f.values
    out = (1.0 - w) * v[i] + w * v[(i + 1) % g.n]
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# contact model


@dataclass(frozen=True)
class QuadraticCoeffs:
    """``h(x, p) = a(x) p**2 + b(x) p + e(x)`` with ``a > 0``."""

    a: TrigPoly
    b: TrigPoly
    e: TrigPoly


@dataclass(frozen=True)
class LagrangianValue:
    l: np.ndarray | float
    argmax_p: np.ndarray | float


@dataclass(frozen=True)
class ContactModel:
    """The equation ``h(x, u') + lam(x) u = c``.

    ``lambda0`` is sup|lam| and ``e0`` a constant with ``h >= -e0``.
    ``cstar(K)`` is a superlinearity constant: ``h(x, p) >= K|p| - cstar(K)``.
    Models built by :func:`quadratic_model` carry coefficient tables and get
    closed-form Legendre transforms and the compiled kernels.
    """

    h: Callable
    lam: Callable
    c: float
    lambda0: float
    e0: float
    cstar: Callable
    h_p: Optional[Callable] = None
    h_x: Optional[Callable] = None
    lam_x: Optional[Callable] = None
    quad: Optional[QuadraticCoeffs] = None
    lam_poly: Optional[TrigPoly] = None
    name: str = "custom"
    meta: dict = field(default_factory=dict, compare=False)

    def with_level(self, c):
        return replace(self, c=float(c))

    def shifted(self, a):
        """Model with ``h`` replaced by ``h + a``."""
        if self.quad is not None:
            q = self.quad
            return quadratic_model(q.a, q.b, q.e.shifted(a), self.lam_poly, c=self.c,
                                   name=f"{self.name}{a:+g}")
        h = self.h
        return replace(
            self,
            h=lambda x, p: h(x, p) + a,
            e0=self.e0 - a,
            cstar=lambda K, _c=self.cstar: _c(K) - a,
            name=f"{self.name}{a:+g}",
        )

    def reversed(self):
        """Model of ``h(x, -p) - lam(x) u`` (forward fixed points, negated)."""
        if self.quad is not None:
            q = self.quad
            return quadratic_model(q.a, q.b.scaled(-1.0), q.e, self.lam_poly.scaled(-1.0),
                                   c=self.c, name=f"{self.name}-reversed")
        h, hp, lam = self.h, self.hp, self.lam
        return replace(
            self,
            h=lambda x, p: h(x, -p),
            h_p=lambda x, p: -hp(x, -p),
            h_x=lambda x, p, _hx=self.hx: _hx(x, -p),
            lam=lambda x: -lam(x),
            lam_x=lambda x, _lx=self.lamx: -_lx(x),
            name=f"{self.name}-reversed",
        )

    # derivatives, falling back to central differences
    def hp(self, x, p):
        if self.h_p is not None:
            return self.h_p(x, p)
        eps = 1e-6 * (1.0 + np.abs(p))
        return (self.h(x, p + eps) - self.h(x, p - eps)) / (2 * eps)

    def hx(self, x, p):
        if self.h_x is not None:
            return self.h_x(x, p)
        eps = 1e-6
        return (self.h(x + eps, p) - self.h(x - eps, p)) / (2 * eps)

    def lamx(self, x):
        if self.lam_x is not None:
            return self.lam_x(x)
        eps = 1e-6
        return (self.lam(x + eps) - self.lam(x - eps)) / (2 * eps)


def quadratic_model(a, b, e, lam, c=0.0, name="quadratic"):
    """Model with ``h = a p^2 + b p + e`` given by trigonometric tables."""
    a, b, e, lam = (v if isinstance(v, TrigPoly) else TrigPoly.constant(v) for v in (a, b, e, lam))
    xs = np.linspace(0.0, TWO_PI, 4096, endpoint=False)
    av, bv, ev = a(xs), b(xs), e(xs)
    if np.min(av) <= 0:
        raise ModelError("quadratic coefficient a(x) must be positive")
    # min_p h = e - b^2 / (4a)
    e0 = float(max(0.0, np.max(bv * bv / (4 * av) - ev)))
    a1, b1, e1, l1 = a.deriv(), b.deriv(), e.deriv(), lam.deriv()

    def cstar(K):
        # a p^2 + (b -+ K) p + e >= -((K + |b|)^2 / 4a - e)
        return float(np.max((K + np.abs(bv)) ** 2 / (4 * av) - ev))

    return ContactModel(
        h=lambda x, p: a(x) * p * p + b(x) * p + e(x),
        lam=lam,
        c=float(c),
        lambda0=lam.sup_abs(),
        e0=e0,
        cstar=cstar,
        h_p=lambda x, p: 2.0 * a(x) * p + b(x),
        h_x=lambda x, p: a1(x) * p * p + b1(x) * p + e1(x),
        lam_x=l1,
        quad=QuadraticCoeffs(a, b, e),
        lam_poly=lam,
        name=name,
    )


def toy_model(c=0.0):
    """``|p|^2 + sin(x) u = c``."""
    m = quadratic_model(1.0, 0.0, 0.0, TrigPoly(cos=(0.0, 0.0), sin=(0.0, 1.0)), c=c, name="toy")
    # exact constants
    return replace(m, lambda0=1.0, e0=0.0, cstar=lambda K: K * K / 4.0, meta={"toy": True})


def general_model(h, lam, c=0.0, *, lambda0=None, e0=None, cstar=None, h_p=None,
                  h_x=None, lam_x=None, name="custom"):
    """Model from arbitrary callables; missing constants are estimated by sampling."""
    xs = np.linspace(0.0, TWO_PI, 512, endpoint=False)
    ps = np.linspace(-50.0, 50.0, 2001)
    X, P = np.meshgrid(xs, ps, indexing="ij")
    H = np.asarray(h(X, P), dtype=float)
    if lambda0 is None:
        lambda0 = float(np.max(np.abs(lam(xs))))
    if e0 is None:
        e0 = float(max(0.0, -np.min(H)))
    if cstar is None:
        def cstar(K, _H=H, _P=P):
            return float(np.max(K * np.abs(_P) - _H))
    return ContactModel(h=h, lam=lam, c=float(c), lambda0=float(lambda0), e0=float(e0),
                        cstar=cstar, h_p=h_p, h_x=h_x, lam_x=lam_x, name=name)


def hamiltonian_value(m, x, p, u):
    return m.h(x, p) + m.lam(x) * u


def legendre(m, x, v):
    """``l(x, v) = sup_p [p v - h(x, p)]`` and its maximiser."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if m.quad is not None:
        a, b, e = m.quad.a(x), m.quad.b(x), m.quad.e(x)
        p = (v - b) / (2 * a)
        l = (v - b) ** 2 / (4 * a) - e
        return LagrangianValue(l, p)
    return numeric_legendre(m, x, v)


def numeric_legendre(m, x, v, rtol=1e-11, max_doublings=40):
    """Golden-section maximisation of ``p v - h(x, p)`` over a bracket in p."""
    x, v = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(v, dtype=float))
    shape = x.shape
    x, v = x.ravel(), v.ravel()

    def g(p):
        return p * v - m.h(x, p)

    P = np.abs(v) / 2.0 + 1.0
    for _ in range(max_doublings):
        eta = 1e-6 * (1.0 + P)
        ok = (g(P) <= g(P - eta)) & (g(-P) <= g(-P + eta))
        if ok.all():
            break
        P = np.where(ok, P, 2.0 * P)
    else:
        raise ModelError("numeric Legendre transform failed to bracket the maximiser")

    lo, hi = -P.copy(), P.copy()
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    g1, g2 = g(x1), g(x2)
    tol = rtol * (1.0 + P)
    while np.any(hi - lo > tol):
        left = g1 >= g2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        x1n = np.where(left, hi - _GOLDEN * (hi - lo), x2)
        x2n = np.where(left, x1, lo + _GOLDEN * (hi - lo))
        g1n = np.where(left, g(x1n), g2)
        g2n = np.where(left, g1, g(x2n))
        x1, x2, g1, g2 = x1n, x2n, g1n, g2n
    p = 0.5 * (lo + hi)
    l = g(p)
    if shape == ():
        return LagrangianValue(float(l[0]), float(p[0]))
    return LagrangianValue(l.reshape(shape), p.reshape(shape))


def lagrangian_value(m, x, v, u):
    """``l(x, v) + c - lam(x) u``."""
    res = legendre(m, x, v).l + m.c - m.lam(x) * u
    return float(res) if np.ndim(res) == 0 else res
