"""Contact characteristics, fixed points and unstable-manifold wave fronts.

For ``H(x, p, u) = h(x, p) + lam(x) u`` at level ``c`` the characteristic
system is

    x' = H_p,    p' = -H_x - H_u p,    u' = p H_p - H + c

and the shell ``H = c`` is invariant (``dH/dt = -lam(x) (H - c)``).
States are kept on the universal cover; ``x`` is only reduced mod 2 pi
when fronts are sampled onto a grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from ._accel import njit
from .errors import (AssemblyError, ConfigurationError, IntegrationError,
                     NonHyperbolicError, TraceError)
from .model import TWO_PI, GridFunction

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ContactState:
    x: float
    p: float
    u: float

    def as_array(self):
        return np.array([self.x, self.p, self.u], dtype=float)

    @classmethod
    def from_array(cls, y):
        return cls(float(y[0]), float(y[1]), float(y[2]))

    def reduced(self):
        return ContactState(self.x % TWO_PI, self.p, self.u)


# ---------------------------------------------------------------------------
# right-hand side


def _coeff_table(m):
    """Rows a_cos, a_sin, b_cos, b_sin, e_cos, e_sin, lam_cos, lam_sin."""
    q = m.quad
    polys = (q.a, q.b, q.e, m.lam_poly)
    K = max(len(t.cos) for t in polys)
    tab = np.zeros((8, K))
    for r, t in enumerate(polys):
        tab[2 * r, :len(t.cos)] = t.cos
        tab[2 * r + 1, :len(t.sin)] = t.sin
    return tab


@njit(cache=True)
def _trig(cs, sn, x):
    val = 0.0
    d1 = 0.0
    for k in range(cs.size):
        ck = math.cos(k * x)
        sk = math.sin(k * x)
        val += cs[k] * ck + sn[k] * sk
        d1 += k * (sn[k] * ck - cs[k] * sk)
    return val, d1


@njit(cache=True)
def _rhs_quad(x, p, u, co, c):
    a, a1 = _trig(co[0], co[1], x)
    b, b1 = _trig(co[2], co[3], x)
    e, e1 = _trig(co[4], co[5], x)
    l, l1 = _trig(co[6], co[7], x)
    hp = 2.0 * a * p + b
    H = (a * p + b) * p + e + l * u
    return hp, -((a1 * p + b1) * p + e1) - l1 * u - l * p, p * hp - H + c


@njit(cache=True)
def _rk4_quad(y0, t0, h, nsteps, last, co, c, ts, ys):
    """Fixed-step RK4; returns the number of valid rows (stops at non-finite)."""
    x, p, u = y0[0], y0[1], y0[2]
    t = t0
    ts[0] = t
    ys[0, 0] = x
    ys[0, 1] = p
    ys[0, 2] = u
    for k in range(nsteps):
        dt = h if k < nsteps - 1 else last
        k1x, k1p, k1u = _rhs_quad(x, p, u, co, c)
        k2x, k2p, k2u = _rhs_quad(x + 0.5 * dt * k1x, p + 0.5 * dt * k1p, u + 0.5 * dt * k1u, co, c)
        k3x, k3p, k3u = _rhs_quad(x + 0.5 * dt * k2x, p + 0.5 * dt * k2p, u + 0.5 * dt * k2u, co, c)
        k4x, k4p, k4u = _rhs_quad(x + dt * k3x, p + dt * k3p, u + dt * k3u, co, c)
        x = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        p = p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        u = u + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        t = t0 + (k + 1) * h if k < nsteps - 1 else t + dt
        if not (math.isfinite(x) and math.isfinite(p) and math.isfinite(u)):
            return k + 1
        ts[k + 1] = t
        ys[k + 1, 0] = x
        ys[k + 1, 1] = p
        ys[k + 1, 2] = u
    return nsteps + 1


def _rhs_generic(y, m):
    x, p, u = y
    lam = m.lam(x)
    hp = m.hp(x, p)
    H = m.h(x, p) + lam * u
    return np.array([hp, -m.hx(x, p) - m.lamx(x) * u - lam * p, p * hp - H + m.c], dtype=float)


def ode_rhs(s, m):
    """Time derivative of the state ``s`` (returned as a ContactState)."""
    if m.quad is not None:
        return ContactState(*(float(v) for v in _rhs_quad(s.x, s.p, s.u, _coeff_table(m), m.c)))
    return ContactState.from_array(_rhs_generic(s.as_array(), m))


def shell_value(m, x, p, u):
    """``H(x, p, u) - c``."""
    return m.h(x, p) + m.lam(x) * u - m.c


# ---------------------------------------------------------------------------
# integration


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray

    @property
    def x(self):
        return self.y[:, 0]

    @property
    def p(self):
        return self.y[:, 1]

    @property
    def u(self):
        return self.y[:, 2]

    def __len__(self):
        return len(self.t)

    def __iter__(self):
        for t, row in zip(self.t, self.y):
            yield float(t), ContactState.from_array(row)

    @property
    def final(self):
        return ContactState.from_array(self.y[-1])

    def energy(self, m):
        return m.h(self.x, self.p) + m.lam(self.x) * self.u


def _schedule(t0, t1, h):
    span = t1 - t0
    if not (math.isfinite(span) and h > 0):
        raise ConfigurationError("integration needs a finite span and h > 0")
    if span == 0:
        return 0, 0.0, 0.0
    step = math.copysign(h, span)
    nsteps = int(math.ceil(abs(span) / h - 1e-9))
    last = span - (nsteps - 1) * step
    return nsteps, step, last


def rk4_integrate(s0, t_span, h, m):
    """Classical RK4 with fixed step ``h``; the last step is shortened to land on ``t_span[1]``.

    Integrates backward in time when ``t_span[1] < t_span[0]``.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    nsteps, step, last = _schedule(t0, t1, h)
    y0 = s0.as_array() if isinstance(s0, ContactState) else np.asarray(s0, dtype=float)
    ts = np.empty(nsteps + 1)
    ys = np.empty((nsteps + 1, 3))
    if m.quad is not None:
        nvalid = _rk4_quad(y0, t0, step, nsteps, last, _coeff_table(m), m.c, ts, ys)
    else:
        nvalid = _rk4_generic(y0, t0, step, nsteps, last, m, ts, ys)
    if nvalid < nsteps + 1:
        raise IntegrationError(t0 + nvalid * step)
    return Trajectory(ts, ys)


def _rk4_generic(y0, t0, h, nsteps, last, m, ts, ys):
    y = y0.copy()
    t = t0
    ts[0], ys[0] = t, y
    for k in range(nsteps):
        dt = h if k < nsteps - 1 else last
        k1 = _rhs_generic(y, m)
        k2 = _rhs_generic(y + 0.5 * dt * k1, m)
        k3 = _rhs_generic(y + 0.5 * dt * k2, m)
        k4 = _rhs_generic(y + dt * k3, m)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (k + 1) * h if k < nsteps - 1 else t + dt
        if not np.all(np.isfinite(y)):
            return k + 1
        ts[k + 1], ys[k + 1] = t, y
    return nsteps + 1


# ---------------------------------------------------------------------------
# fixed points


@dataclass
class FixedPointInfo:
    state: ContactState
    jacobian: np.ndarray = None
    eigenvalues: tuple = None
    unstable_eigvec: np.ndarray = None

    @property
    def unstable_eigenvalue(self):
        return max(self.eigenvalues)


def _is_toy(m):
    return bool(m.meta.get("toy"))


def find_fixed_points(m, c=None, seeds=64, newton_tol=1e-13, max_iter=50):
    """Fixed points of the characteristic flow with ``x`` in ``[-pi, pi)``.

    Closed form for the toy model; otherwise Newton on the full right-hand
    side from ``seeds`` starting positions, deduplicated mod 2 pi.
    """
    c = m.c if c is None else float(c)
    if not c > 0:
        raise ConfigurationError("fixed points are only classified for c > 0")
    mc = m.with_level(c)
    if _is_toy(mc):
        pts = [ContactState(math.pi / 2, 0.0, c), ContactState(-math.pi / 2, 0.0, -c)]
        return [linearize(FixedPointInfo(s), mc, c) for s in pts]
    found = []
    for x0 in np.linspace(-math.pi, math.pi, seeds, endpoint=False):
        s = _newton(mc, x0, newton_tol, max_iter)
        if s is None:
            log.info("Newton did not converge from x = %.6f", x0)
            continue
        xr = (s.x + math.pi) % TWO_PI - math.pi
        s = ContactState(xr, s.p, s.u)
        if any(abs(_arcdist(s.x, f.x)) < 1e-7 and abs(s.u - f.u) < 1e-7 for f in found):
            continue
        found.append(s)
    found.sort(key=lambda s: s.x)
    out = []
    for s in found:
        try:
            out.append(linearize(FixedPointInfo(s), mc, c))
        except NonHyperbolicError:
            log.info("skipping non-hyperbolic fixed point at x = %.6f", s.x)
    return out


def _arcdist(a, b):
    return (a - b + math.pi) % TWO_PI - math.pi


def _newton(m, x0, tol, max_iter):
    lam = float(m.lam(x0))
    if abs(lam) < 1e-8:
        return None
    # p from H_p = 0 by a few scalar Newton steps, u from the shell
    p = 0.0
    for _ in range(20):
        g = float(m.hp(x0, p))
        eps = 1e-6
        dg = (float(m.hp(x0, p + eps)) - float(m.hp(x0, p - eps))) / (2 * eps)
        p -= g / dg
    y = np.array([x0, p, (m.c - float(m.h(x0, p))) / lam])
    for _ in range(max_iter):
        f = _rhs_generic(y, m)
        if np.max(np.abs(f)) < tol:
            return ContactState.from_array(y)
        J = np.empty((3, 3))
        for j in range(3):
            d = np.zeros(3)
            d[j] = 1e-7
            J[:, j] = (_rhs_generic(y + d, m) - _rhs_generic(y - d, m)) / 2e-7
        try:
            y = y - np.linalg.solve(J, f)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(y)):
            return None
    return ContactState.from_array(y) if np.max(np.abs(_rhs_generic(y, m))) < 1e-10 else None


def _jacobian(m, s):
    x, p, u = s.x, s.p, s.u
    if m.quad is not None:
        q = m.quad
        a1, b1 = q.a.deriv()(x), q.b.deriv()(x)
        a2, b2, e2 = q.a.deriv(2)(x), q.b.deriv(2)(x), q.e.deriv(2)(x)
        lam = m.lam_poly(x)
        l1, l2 = m.lam_poly.deriv()(x), m.lam_poly.deriv(2)(x)
        a = q.a(x)
        return np.array([
            [2 * a1 * p + b1, 2 * a],
            [-((a2 * p + b2) * p + e2) - l2 * u - l1 * p, -(2 * a1 * p + b1) - lam],
        ], dtype=float)
    eps = 1e-6
    J = np.empty((2, 2))
    for j in range(2):
        d = np.zeros(3)
        d[j] = eps
        y = s.as_array()
        J[:, j] = ((_rhs_generic(y + d, m) - _rhs_generic(y - d, m)) / (2 * eps))[:2]
    return J


def linearize(fp, m, c=None):
    """Jacobian of the ``(x, p)`` flow at ``fp`` with ``u`` frozen, its
    eigenvalues and the unit unstable eigenvector (pointing to larger x)."""
    c = m.c if c is None else float(c)
    mc = m.with_level(c)
    s = fp.state
    J = _jacobian(mc, s)
    tr = J[0, 0] + J[1, 1]
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    disc = tr * tr - 4 * det
    if disc < 0:
        raise NonHyperbolicError(f"complex eigenvalues at x = {s.x:.6f}")
    r = math.sqrt(disc)
    mu_s, mu_u = (tr - r) / 2, (tr + r) / 2
    if not (mu_s < 0 < mu_u):
        raise NonHyperbolicError(f"not a saddle at x = {s.x:.6f}: eigenvalues {mu_s:g}, {mu_u:g}")
    if J[0, 1] != 0:
        v = np.array([J[0, 1], mu_u - J[0, 0]])
    else:
        v = np.array([mu_u - J[1, 1], J[1, 0]])
    v = v / np.linalg.norm(v)
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        v = -v
    return FixedPointInfo(state=s, jacobian=J, eigenvalues=(mu_s, mu_u), unstable_eigvec=v)


# ---------------------------------------------------------------------------
# wave fronts


@dataclass
class Branch:
    x: np.ndarray
    u: np.ndarray
    p: np.ndarray
    reason: str
    t_end: float


@dataclass
class WaveFront:
    """Graph ``x -> u`` of the horizontal part of an unstable manifold."""

    samples: np.ndarray
    slopes: np.ndarray
    source: FixedPointInfo
    sigma: float
    extent: tuple
    reasons: tuple
    _spline: CubicHermiteSpline = field(default=None, repr=False)

    def __post_init__(self):
        self._spline = CubicHermiteSpline(self.samples[:, 0], self.samples[:, 1], self.slopes)

    @property
    def x(self):
        return self.samples[:, 0]

    @property
    def u(self):
        return self.samples[:, 1]

    @property
    def domain(self):
        return float(self.samples[0, 0]), float(self.samples[-1, 0])

    def __call__(self, x):
        """Value at ``x`` (on the cover); NaN outside the traced interval."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        out = np.full(x.shape, np.nan)
        inside = (x >= lo) & (x <= hi)
        if np.any(inside):
            out[inside] = self._spline(x[inside])
        return out if out.ndim else float(out)


def _project(m, x, p):
    lam = float(m.lam(x))
    if abs(lam) < 1e-12:
        raise TraceError("cannot project onto the shell where lam vanishes")
    return (m.c - float(m.h(x, p))) / lam


def _trace_branch(m, s0, direction, x_fp, h, chunk, t_cap, stall):
    xs, us, ps = [s0.x], [s0.u], [s0.p]
    y = s0.as_array()
    t = 0.0
    v0 = float(m.hp(s0.x, s0.p)) * direction
    if not v0 > 0:
        raise TraceError("branch turns immediately; increase eps")
    while True:
        tr = rk4_integrate(y, (t, min(t + chunk, t_cap)), h, m)
        X, P, U = tr.x[1:], tr.p[1:], tr.u[1:]
        vel = np.asarray(m.hp(X, P), dtype=float) * direction
        off = np.abs(X - x_fp) > TWO_PI
        turn = vel <= 0
        rhs_p = np.abs(-np.asarray(m.hx(X, P)) - m.lamx(X) * U - m.lam(X) * P)
        halt = (vel < stall) & (rhs_p < 1e-8)
        bad = np.abs(P) > 1e6
        stop = turn | off | halt | bad
        if stop.any():
            k = int(np.argmax(stop))
            if turn[k]:
                prev = np.array([xs[-1], ps[-1], us[-1]]) if k == 0 else np.array([X[k - 1], P[k - 1], U[k - 1]])
                vprev = float(m.hp(prev[0], prev[1])) * direction
                theta = vprev / (vprev - vel[k]) if vprev != vel[k] else 0.0
                cur = np.array([X[k], P[k], U[k]])
                pt = prev + theta * (cur - prev)
                xs.extend(X[:k])
                us.extend(U[:k])
                ps.extend(P[:k])
                xs.append(pt[0])
                us.append(pt[2])
                ps.append(pt[1])
                reason = "turning"
            else:
                xs.extend(X[:k])
                us.extend(U[:k])
                ps.extend(P[:k])
                reason = "span" if off[k] else ("stall" if halt[k] else "blowup")
            return Branch(np.array(xs), np.array(us), np.array(ps), reason, float(tr.t[k + 1]))
        xs.extend(X)
        us.extend(U)
        ps.extend(P)
        t = float(tr.t[-1])
        y = tr.y[-1]
        if t >= t_cap:
            return Branch(np.array(xs), np.array(us), np.array(ps), "time", t)


def trace_wavefront(fp, m, c=None, eps=1e-6, h=1e-3, t_cap=60.0, chunk=2.0, stall=1e-10):
    """Trace both branches of the unstable manifold of ``fp`` up to turning.

    Each branch starts at ``fp +- eps * unstable_eigvec`` projected onto the
    shell and stops at the first turning point of ``x`` (back-interpolated),
    after travelling 2 pi, when it stalls next to another fixed point, or at
    ``t_cap``.
    """
    if not (1e-8 <= eps <= 1e-4):
        raise ConfigurationError("eps must lie in [1e-8, 1e-4]")
    c = m.c if c is None else float(c)
    mc = m.with_level(c)
    if fp.unstable_eigvec is None:
        fp = linearize(fp, mc, c)
    s = fp.state
    branches = []
    for sign in (-1.0, 1.0):
        x = s.x + sign * eps * fp.unstable_eigvec[0]
        p = s.p + sign * eps * fp.unstable_eigvec[1]
        s0 = ContactState(x, p, _project(mc, x, p))
        branches.append(_trace_branch(mc, s0, sign, s.x, h, chunk, t_cap, stall))
    left, right = branches
    xs = np.concatenate([left.x[::-1], [s.x], right.x])
    us = np.concatenate([left.u[::-1], [s.u], right.u])
    ps = np.concatenate([left.p[::-1], [s.p], right.p])
    keep = np.empty(xs.size, dtype=bool)
    keep[0] = True
    last = xs[0]
    for i in range(1, xs.size):
        keep[i] = xs[i] > last + 1e-13
        if keep[i]:
            last = xs[i]
    xs, us, ps = xs[keep], us[keep], ps[keep]
    ext = (float(s.x - xs[0]), float(xs[-1] - s.x))
    return WaveFront(
        samples=np.column_stack([xs, us]),
        slopes=ps,
        source=fp,
        sigma=min(ext),
        extent=ext,
        reasons=(left.reason, right.reason),
    )


# ---------------------------------------------------------------------------
# assembly


@dataclass
class Assembly:
    u0: GridFunction
    u1: GridFunction
    fronts: list


def _min_translates(fronts, x, ks=(-1, 0, 1)):
    best = np.full(x.shape, np.inf)
    for wf in fronts:
        for k in ks:
            v = wf(x - TWO_PI * k)
            best = np.where(np.isnan(v), best, np.minimum(best, v))
    return best


def assemble_solutions(m, c=None, grid=None, eps=1e-6, h=1e-3, full=False):
    """The two solutions as minima over 2 pi translates of the wave fronts.

    ``u1`` uses the fronts of fixed points where ``lam > 0`` and ``u0`` all
    fronts.  Returns ``(u0, u1)``, or an :class:`Assembly` when ``full``.
    """
    if grid is None:
        raise ConfigurationError("assemble_solutions needs a grid")
    c = m.c if c is None else float(c)
    mc = m.with_level(c)
    fps = find_fixed_points(mc, c)
    fronts = [trace_wavefront(fp, mc, c, eps=eps, h=h) for fp in fps]
    upper = [wf for wf in fronts if float(mc.lam(wf.source.state.x)) > 0]
    if not upper:
        raise AssemblyError("no fixed point with positive lam")
    x = grid.nodes
    v1 = _min_translates(upper, x)
    v0 = _min_translates(fronts, x)
    if not (np.all(np.isfinite(v1)) and np.all(np.isfinite(v0))):
        raise AssemblyError("wave fronts do not cover the circle")
    u0, u1 = GridFunction(grid, v0), GridFunction(grid, v1)
    if full:
        return Assembly(u0, u1, fronts)
    return u0, u1
