"""Closed-form solutions of the toy equation ``|u'|^2 + sin(x) u = 0``.

On ``[pi, 2 pi]`` the profile ``phi(x) = (1/2 int_pi^x sqrt(-sin t) dt)^2``
solves ``phi' = sqrt(-sin(x) phi)``.  A bump ``u_{a,b}`` on ``[a, b]`` is
the minimum of the profiles started at ``a`` and ending at ``b``, and any
sum of bumps on disjoint intervals is again a solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, FamilyError
from .model import GridFunction

PI = math.pi
TWO_PI = 2.0 * math.pi
QUAD_TOL = 1e-12
_SLACK = 1e-12


def _root_neg_sin(t):
    return math.sqrt(max(-math.sin(t), 0.0))


def half_integral(a, b):
    """``1/2 int_a^b sqrt(-sin t) dt`` for ``pi <= a <= b <= 2 pi``."""
    if b <= a:
        return 0.0
    val, _ = quad(_root_neg_sin, a, b, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    return 0.5 * val


def _check_domain(*xs):
    for x in xs:
        if not (PI - _SLACK <= x <= TWO_PI + _SLACK):
            raise DomainError(f"{x} is outside [pi, 2 pi]")


def phi_critical(x):
    _check_domain(x)
    x = min(max(x, PI), TWO_PI)
    return half_integral(PI, x) ** 2


def u_ab(a, b, x):
    """Bump on ``[a, b]``, zero outside (``x`` taken mod 2 pi)."""
    _check_domain(a, b)
    if not a < b:
        raise DomainError(f"need a < b, got ({a}, {b})")
    x = float(x) % TWO_PI
    if x <= a or x >= b:
        return 0.0
    return min(half_integral(a, x), half_integral(x, b)) ** 2


@dataclass(frozen=True)
class IntervalFamily:
    intervals: tuple = ()

    def __post_init__(self):
        ivs = tuple(sorted((float(a), float(b)) for a, b in self.intervals))
        for a, b in ivs:
            _check_domain(a, b)
            if not a < b:
                raise DomainError(f"empty interval ({a}, {b})")
        for (a0, b0), (a1, b1) in zip(ivs, ivs[1:]):
            if a1 < b0:
                raise FamilyError(f"intervals ({a0}, {b0}) and ({a1}, {b1}) overlap")
        object.__setattr__(self, "intervals", ivs)

    def __len__(self):
        return len(self.intervals)


def _bump_on_nodes(a, b, x):
    """Bump values at the sorted points ``x`` inside ``(a, b)``."""
    pts = np.concatenate([[a], x, [b]])
    seg = np.array([half_integral(p, q) for p, q in zip(pts[:-1], pts[1:])])
    cum = np.cumsum(seg)
    left = cum[:-1]
    right = cum[-1] - left
    return np.minimum(left, right) ** 2


def build_critical_solution(fam, grid):
    """Nodal values of the sum of bumps; zero on ``[0, pi]``."""
    if not isinstance(fam, IntervalFamily):
        fam = IntervalFamily(tuple(fam))
    x = grid.nodes
    vals = np.zeros(grid.n)
    for a, b in fam.intervals:
        if b - a < 2 * grid.dx:
            raise FamilyError(f"interval ({a}, {b}) is shorter than two grid cells")
        inside = (x > a) & (x < b)
        vals[inside] = _bump_on_nodes(a, b, x[inside])
    return GridFunction(grid, vals)
