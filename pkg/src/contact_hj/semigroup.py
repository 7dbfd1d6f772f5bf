"""Discrete implicit Lax-Oleinik semigroups on the circle.

A single backward step of length ``delta`` maps ``f`` to

    U(x) = min_y [f(y) + delta * (l(x, (x - y)/delta) + c)] / (1 + delta * lam(x))

which is the implicit one-step action with the value argument frozen at the
arrival point; the forward step is the mirrored ``max`` with
``1 - delta * lam(x)`` in the denominator.  The minimisation runs over the
linear interpolant of ``f`` on a window of ``window`` cells either side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from ._accel import USE_NUMBA
from .errors import ConfigurationError, DivergenceError, HorizonError, StepError
from .model import TWO_PI, GridFunction, legendre

BACKWARD = "backward"
FORWARD = "forward"


@dataclass(frozen=True)
class StepParams:
    """Discretisation and stopping parameters.

    ``slack`` is the constant K in the monotonicity slack ``K * delta**2``.
    """

    delta: float
    window: int
    tol: float = 1e-8
    t_max: float = 400.0
    v_max: float = 0.0
    slack: float = 10.0
    blowup: float = 1e6
    growth_steps: int = 100

    @classmethod
    def make(cls, grid, delta, v_max, **kw):
        window = int(math.ceil(v_max * delta / grid.dx - 1e-12)) + 1
        return cls(delta=float(delta), window=window, v_max=float(v_max), **kw)

    @property
    def slack_value(self):
        return self.slack * self.delta ** 2


def lipschitz_bound(m, c=None):
    """A priori Lipschitz bound for subsolutions at level ``c``.

    From ``h >= K|p| - C*(K)`` with ``K = 1 + pi * lambda0`` (pi is the
    diameter of the circle) and the sup bound ``|c + e0| + pi * Lip``.
    """
    c = m.c if c is None else c
    K = 1.0 + math.pi * m.lambda0
    return max(1.0, c + m.cstar(K) + m.lambda0 * abs(c + m.e0))


def velocity_cap(m, c=None):
    """``max |h_p|`` over slopes allowed by :func:`lipschitz_bound` (``2 L`` for ``h = p^2``)."""
    L = lipschitz_bound(m, c)
    xs = np.linspace(0.0, TWO_PI, 256, endpoint=False)
    ps = np.linspace(-L, L, 65)
    X, P = np.meshgrid(xs, ps)
    return float(np.max(np.abs(m.hp(X, P))))


def default_step_params(m, grid, delta=1e-3, **kw):
    return StepParams.make(grid, delta, velocity_cap(m), **kw)


def _check(m, grid, sp, delta=None):
    delta = sp.delta if delta is None else delta
    if not delta > 0:
        raise StepError("time step must be positive")
    if not delta * m.lambda0 < 1.0:
        raise StepError(f"delta * lambda0 = {delta * m.lambda0:g} must be < 1")
    if sp.window < 1:
        raise ConfigurationError("empty search window")
    if 2 * sp.window + 1 > grid.n:
        raise ConfigurationError("search window wraps around the circle")
    if sp.window * grid.dx < sp.v_max * sp.delta * (1 - 1e-12):
        raise ConfigurationError("window does not cover v_max * delta")


class Stepper:
    """Precomputed per-node data for repeated steps of one model on one grid."""

    def __init__(self, m, grid, sp, delta=None):
        _check(m, grid, sp, delta)
        self.m = m
        self.grid = grid
        self.sp = sp
        self.delta = float(sp.delta if delta is None else delta)
        self.W = int(sp.window)
        x = grid.nodes
        self.x = x
        self.lam = np.asarray(m.lam(x), dtype=float) * np.ones(grid.n)
        ks = np.arange(-self.W, self.W + 1)
        V = ks[None, :] * grid.dx / self.delta
        self.ltab = np.ascontiguousarray(self.delta * legendre(m, x[:, None], V).l * np.ones((grid.n, 1)))
        self.fast = USE_NUMBA and m.quad is not None
        if m.quad is not None:
            self.a = np.ascontiguousarray(m.quad.a(x) * np.ones(grid.n))
            self.b = np.ascontiguousarray(m.quad.b(x) * np.ones(grid.n))
            self.e = np.ascontiguousarray(m.quad.e(x) * np.ones(grid.n))
        self.viol = np.zeros(grid.n, dtype=np.int8)

    def step(self, f, direction):
        """One step on raw node values; returns ``(values, change, sup)``."""
        out = np.empty_like(f)
        args = (self.lam, self.ltab, self.W, self.grid.dx, self.delta, self.m.c,
                self.sp.slack_value, out, self.viol)
        if self.fast:
            kern = _kernels.backward_quad if direction == BACKWARD else _kernels.forward_quad
            change, sup = kern(f, self.a, self.b, self.e, *args)
        else:
            kern = _kernels.backward_numpy if direction == BACKWARD else _kernels.forward_numpy
            change, sup = kern(f, self.x, self.m.h, self.m.hp, *args)
        return out, change, sup


def _direction(direction):
    if direction not in (BACKWARD, FORWARD):
        raise ConfigurationError(f"direction must be '{BACKWARD}' or '{FORWARD}'")
    return direction


def backward_step(f, m, sp):
    vals, _, _ = Stepper(m, f.grid, sp).step(f.values, BACKWARD)
    return GridFunction(f.grid, vals)


def forward_step(f, m, sp):
    vals, _, _ = Stepper(m, f.grid, sp).step(f.values, FORWARD)
    return GridFunction(f.grid, vals)


def _step_schedule(t, delta):
    """Number of full steps and the length of the final (possibly short) step."""
    if t < 0:
        raise HorizonError("evolution time must be non-negative")
    if t == 0:
        return 0, 0.0
    nsteps = int(math.ceil(t / delta - 1e-9))
    last = t - (nsteps - 1) * delta
    if abs(last - delta) <= 1e-12 * delta:
        last = delta
    return nsteps, last


class _Divergence:
    """Sup-norm blowup with confirmation by monotone growth."""

    def __init__(self, sp):
        self.sp = sp
        self.prev = None
        self.growing = 0

    def update(self, sup, iterations):
        if self.prev is not None and sup > self.prev:
            self.growing += 1
        else:
            self.growing = 0
        self.prev = sup
        if not np.isfinite(sup) or sup > 1e6 * self.sp.blowup:
            raise DivergenceError(iterations, sup)
        if sup > self.sp.blowup and self.growing >= self.sp.growth_steps:
            raise DivergenceError(iterations, sup)


def evolve(f, t, m, sp, direction=BACKWARD, detect_divergence=False):
    """``T_t f`` by composing single steps; the last step is shortened to land on ``t``."""
    _direction(direction)
    nsteps, last = _step_schedule(t, sp.delta)
    if nsteps == 0:
        return f
    vals = _evolve_values(f.values.copy(), f.grid, m, sp, direction, nsteps, last,
                          detect_divergence)
    return GridFunction(f.grid, vals)


def _evolve_values(vals, grid, m, sp, direction, nsteps, last, detect_divergence):
    st = Stepper(m, grid, sp)
    guard = _Divergence(sp) if detect_divergence else None
    for k in range(nsteps - 1):
        vals, _, sup = st.step(vals, direction)
        if guard is not None:
            guard.update(sup, k + 1)
    if last == sp.delta:
        vals, _, sup = st.step(vals, direction)
    else:
        vals, _, sup = Stepper(m, grid, sp, delta=last).step(vals, direction)
    if guard is not None:
        guard.update(sup, nsteps)
    return vals


@dataclass
class SolveReport:
    solution: GridFunction
    converged: bool
    iterations: int
    final_residual: float
    monotone_violations: int
    t: float = 0.0


def solve_fixed_point(f0, m, sp, direction=BACKWARD, t_max=None, monotone=False):
    """Iterate single steps until the sup-norm change per unit time is below ``sp.tol``.

    With ``monotone=True`` the seed is taken to be a subsolution and each
    iterate is replaced by its envelope with the previous one (``max`` for
    backward, ``min`` for forward), the discrete counterpart of
    ``v <= T_t v``.  Raises :class:`DivergenceError` when the orbit blows up.
    """
    _direction(direction)
    t_max = sp.t_max if t_max is None else t_max
    st = Stepper(m, f0.grid, sp)
    guard = _Divergence(sp)
    vals = f0.values.copy()
    max_steps = int(math.ceil(t_max / sp.delta))
    rate = math.inf
    it = 0
    converged = False
    for it in range(1, max_steps + 1):
        new, change, sup = st.step(vals, direction)
        if monotone:
            new = np.maximum(new, vals) if direction == BACKWARD else np.minimum(new, vals)
            change = float(np.max(np.abs(new - vals)))
        vals = new
        guard.update(sup, it)
        rate = change / sp.delta
        if rate <= sp.tol:
            converged = True
            break
    return SolveReport(
        solution=GridFunction(f0.grid, vals),
        converged=converged,
        iterations=it,
        final_residual=rate,
        monotone_violations=int(st.viol.sum()),
        t=it * sp.delta,
    )


def lowered_seed(u_plus, sp):
    """Seed for the backward solve started from a forward fixed point.

    The forward limit is only known to within about ``sp.tol`` of the
    discrete fixed point.  Any excess at the points where it touches the
    lower backward solution is amplified exponentially by the backward
    flow, so the seed is pushed down by a margin that dominates that error.
    """
    return GridFunction(u_plus.grid, u_plus.values - 10.0 * max(sp.tol, 1e-12))


@dataclass
class PairReport:
    u_minus: SolveReport
    u_plus: SolveReport
    u_bar_minus: SolveReport

    @property
    def converged(self):
        return self.u_minus.converged and self.u_plus.converged and self.u_bar_minus.converged


def solution_pair(v, m, sp, t_max=None):
    """``v -> u_minus`` and ``v -> u_plus -> u_bar_minus`` for a subsolution seed ``v``.

    When ``v`` is a strict subsolution the two backward limits may differ,
    which is how a second solution is exhibited.
    """
    sub = check_subsolution(v, m, sp)
    um = solve_fixed_point(v, m, sp, BACKWARD, t_max=t_max, monotone=sub)
    up = solve_fixed_point(v, m, sp, FORWARD, t_max=t_max, monotone=sub)
    ub = solve_fixed_point(lowered_seed(up.solution, sp), m, sp, BACKWARD, t_max=t_max,
                           monotone=True)
    return PairReport(um, up, ub)


# ---------------------------------------------------------------------------
# action functions


def _arc(d):
    return (d + math.pi) % TWO_PI - math.pi


def action_function(x0, u0, x, t, m, sp, direction=BACKWARD, grid=None, values=False):
    """Backward ``h^c_{x0,u0}(x, t)`` or forward ``h_c^{x0,u0}(x, t)``.

    The first step is taken exactly from the point source at ``x0`` (every
    node is reached with the straight one-step velocity), later steps use the
    usual grid step.  The window is widened to cover velocities ``2 pi / t``.
    With ``values=True`` the whole grid function at time ``t`` is returned.
    """
    _direction(direction)
    if grid is None:
        raise ConfigurationError("action_function needs a grid")
    if t < sp.delta * (1 - 1e-12):
        raise HorizonError(f"horizon t = {t} is shorter than one step {sp.delta}")
    v_need = max(sp.v_max, TWO_PI / t)
    if v_need > sp.v_max:
        sp = StepParams.make(grid, sp.delta, v_need, tol=sp.tol, t_max=sp.t_max,
                             slack=sp.slack, blowup=sp.blowup, growth_steps=sp.growth_steps)
    _check(m, grid, sp)
    xs = grid.nodes
    lam = np.asarray(m.lam(xs), dtype=float) * np.ones(grid.n)
    d = sp.delta
    disp = _arc(xs - x0)
    if direction == BACKWARD:
        l = legendre(m, xs, disp / d).l
        vals = (u0 + d * (l + m.c)) / (1.0 + d * lam)
    else:
        l = legendre(m, xs, -disp / d).l
        vals = (u0 - d * (l + m.c)) / (1.0 - d * lam)
    nsteps, last = _step_schedule(t - d, d)
    if nsteps:
        vals = _evolve_values(vals, grid, m, sp, direction, nsteps, last, False)
    g = GridFunction(grid, vals)
    if values:
        return g
    return g(x)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class ResidualReport:
    max_smooth_residual: float
    argmax_x: float
    smooth_nodes: int
    kink_threshold: float
    concave_kinks: np.ndarray
    convex_kinks: np.ndarray

    @property
    def n_kinks(self):
        return len(self.concave_kinks) + len(self.convex_kinks)

    def passes(self, gate, admissible="concave"):
        """Residual gate; ``admissible`` is the kink type allowed (backward
        solutions have concave kinks, forward ones convex)."""
        bad = self.convex_kinks if admissible == "concave" else self.concave_kinks
        return self.max_smooth_residual <= gate and len(bad) == 0

    def as_dict(self):
        return {
            "max_smooth_residual": self.max_smooth_residual,
            "argmax_x": self.argmax_x,
            "smooth_nodes": self.smooth_nodes,
            "kink_threshold": self.kink_threshold,
            "concave_kinks": [float(v) for v in self.concave_kinks],
            "convex_kinks": [float(v) for v in self.convex_kinks],
        }


def default_kink_threshold(grid):
    return 0.02 + 8.0 * grid.dx


def residual_report(f, m, kink_threshold=None):
    """Pointwise residual of ``h(x, u') + lam(x) u - c`` away from kinks.

    A node is a kink when its one-sided slopes differ by more than the
    threshold; concave kinks (left slope larger) are admissible for
    backward solutions.  Nodes adjacent to a kink are excluded from the
    smooth residual.
    """
    g = f.grid
    dx = g.dx
    thr = default_kink_threshold(g) if kink_threshold is None else kink_threshold
    v = f.values
    left = (v - np.roll(v, 1)) / dx
    right = (np.roll(v, -1) - v) / dx
    jump = left - right
    kink = np.abs(jump) > thr
    near = kink | np.roll(kink, 1) | np.roll(kink, -1)
    smooth = ~near
    x = g.nodes
    du = 0.5 * (left + right)
    res = np.abs(m.h(x, du) + m.lam(x) * v - m.c)
    if smooth.any():
        r = np.where(smooth, res, -1.0)
        i = int(np.argmax(r))
        worst, at = float(r[i]), float(x[i])
    else:
        worst, at = 0.0, float("nan")
    return ResidualReport(
        max_smooth_residual=worst,
        argmax_x=at,
        smooth_nodes=int(smooth.sum()),
        kink_threshold=thr,
        concave_kinks=x[kink & (jump > 0)],
        convex_kinks=x[kink & (jump < 0)],
    )


def check_subsolution(f, m, sp):
    """``True`` iff one backward step does not decrease ``f`` beyond ``K delta^2``."""
    vals, _, _ = Stepper(m, f.grid, sp).step(f.values, BACKWARD)
    return bool(np.all(vals >= f.values - sp.slack_value))


def staying_curve_bound(m, c=None, t=1.0, sp=None, grid=None):
    """Upper bound ``B0`` for backward iterates of subsolutions.

    Evaluates ``max_x h^c_{x1, l^c(x1,0)+1}(x, 1)`` with ``x1`` a maximiser of
    ``lam``.
    """
    c = m.c if c is None else c
    mc = m.with_level(c)
    xs = grid.nodes
    x1 = float(xs[int(np.argmax(m.lam(xs)))])
    lc0 = float(legendre(mc, x1, 0.0).l) + c
    g = action_function(x1, lc0 + 1.0, 0.0, t, mc, sp, BACKWARD, grid=grid, values=True)
    return float(g.values.max())


def w1inf_bound(m, grid, sp, c=None):
    """``B`` with ``|u|_inf + Lip(u) <= B`` for every solution at level ``c``."""
    c = m.c if c is None else c
    sup = max(staying_curve_bound(m, c, sp=sp, grid=grid),
              staying_curve_bound(m.reversed(), c, sp=sp, grid=grid))
    K = 1.0 + m.lambda0
    lip = (c + m.lambda0 * sup + m.cstar(K)) / K
    return sup + lip, sup, lip
