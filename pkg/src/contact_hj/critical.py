"""Critical value by bisection on long-time boundedness of backward orbits.

Below the critical value the backward orbit of any bounded seed runs off
to -infinity; at or above it the orbit stays bounded.  The estimator
bisects on that dichotomy starting from the zero function.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, HorizonError
from .model import TWO_PI, make_grid
from .semigroup import BACKWARD, StepParams, Stepper, default_step_params

log = logging.getLogger(__name__)

BOUNDED = "bounded"
DIVERGED = "diverged"
AMBIGUOUS = "ambiguous"


@dataclass
class Probe:
    c: float
    outcome: str
    t: float
    sup: float
    horizon: float


@dataclass
class CriticalEstimate:
    c_hat: float
    bracket: tuple
    tol: float
    unbounded_below: bool = False
    horizon: float = 50.0
    probes: list = field(default_factory=list)

    def as_dict(self):
        return {
            "c_hat": self.c_hat,
            "c_lo": self.bracket[0],
            "c_hi": self.bracket[1],
            "tol": self.tol,
            "unbounded_below": self.unbounded_below,
            "horizon": self.horizon,
            "probes": len(self.probes),
        }


def _probe(m, horizon, sp, grid):
    """Evolve the zero function backward; classify the orbit."""
    st = Stepper(m, grid, sp)
    vals = np.zeros(grid.n)
    nsteps = int(math.ceil(horizon / sp.delta - 1e-9))
    half = nsteps // 2
    sup_half = 0.0
    prev = 0.0
    growing = 0
    sup = 0.0
    for k in range(1, nsteps + 1):
        vals, change, sup = st.step(vals, BACKWARD)
        growing = growing + 1 if sup > prev else 0
        prev = sup
        if not np.isfinite(sup) or (sup > sp.blowup and growing >= sp.growth_steps):
            return DIVERGED, k * sp.delta, sup
        if change / sp.delta <= sp.tol:
            return BOUNDED, k * sp.delta, sup
        if k == half:
            sup_half = sup
    if growing >= sp.growth_steps and sup > 1.0 and sup > 2.0 * sup_half:
        return AMBIGUOUS, horizon, sup
    return BOUNDED, horizon, sup


def bounded_orbit(m, horizon=50.0, sp=None, grid=None, probes=None):
    """``True`` unless the backward orbit of 0 diverges within ``horizon``.

    An ambiguous orbit (still growing fast at the horizon without crossing
    the blowup threshold) is re-run once with the horizon doubled.
    """
    if horizon < 10:
        raise HorizonError("horizon must be at least 10")
    grid = make_grid(1024) if grid is None else grid
    sp = default_step_params(m, grid) if sp is None else sp
    h = float(horizon)
    outcome, t, sup = _probe(m, h, sp, grid)
    if outcome == AMBIGUOUS:
        h *= 2.0
        log.info("ambiguous orbit at c = %g; doubling horizon to %g", m.c, h)
        outcome, t, sup = _probe(m, h, sp, grid)
        if outcome == AMBIGUOUS:
            outcome = BOUNDED
    if probes is not None:
        probes.append(Probe(m.c, outcome, t, sup, h))
    log.debug("probe c = %.6f: %s at t = %.3f (|f| = %.3e)", m.c, outcome, t, sup)
    return outcome != DIVERGED


def default_bracket(m):
    """``[-e0 - 1, sup_x h(x, 0) + 1]``."""
    xs = np.linspace(0.0, TWO_PI, 4096, endpoint=False)
    return -m.e0 - 1.0, float(np.max(m.h(xs, 0.0 * xs))) + 1.0


def estimate_critical_value(m, c_lo=None, c_hi=None, tol=0.02, sp=None, *, grid=None,
                            delta=1e-3, horizon=50.0, widen=3):
    """Bisect on :func:`bounded_orbit` until the bracket is at most ``2 tol`` wide.

    When the orbit is already bounded at ``c_lo`` the bracket is widened
    downward (doubling its width) up to ``widen`` times; if it is still
    bounded the estimate is reported as unbounded below.
    """
    lo0, hi0 = default_bracket(m)
    c_lo = lo0 if c_lo is None else float(c_lo)
    c_hi = hi0 if c_hi is None else float(c_hi)
    if not c_lo < c_hi:
        raise ConfigurationError(f"invalid bracket [{c_lo}, {c_hi}]")
    if not tol > 0:
        raise ConfigurationError("tol must be positive")
    grid = make_grid(1024) if grid is None else grid
    probes = []

    def ok(c):
        mc = m.with_level(c)
        spc = sp if sp is not None else default_step_params(mc, grid, delta)
        return bounded_orbit(mc, horizon, spc, grid, probes)

    if not ok(c_hi):
        raise ConfigurationError(f"orbit unbounded at the upper end c = {c_hi:g}")
    width = c_hi - c_lo
    tries = 0
    while ok(c_lo):
        if tries == widen:
            return CriticalEstimate(-math.inf, (c_lo, c_hi), tol, True, horizon, probes)
        width *= 2.0
        c_hi, c_lo = c_lo, c_lo - width
        tries += 1
    while c_hi - c_lo > 2.0 * tol:
        mid = 0.5 * (c_lo + c_hi)
        if ok(mid):
            c_hi = mid
        else:
            c_lo = mid
    return CriticalEstimate(0.5 * (c_lo + c_hi), (c_lo, c_hi), tol, False, horizon, probes)
