import math

import numpy as np
import pytest

from contact_hj.characteristics import (ContactState, FixedPointInfo, assemble_solutions,
                                        find_fixed_points, linearize, ode_rhs, rk4_integrate,
                                        trace_wavefront)
from contact_hj.errors import ConfigurationError, IntegrationError, NonHyperbolicError
from contact_hj.model import general_model, make_grid, toy_model

from conftest import HALF_PI


def on_shell_heteroclinic(x):
    """Start on the graph of sin at level 1: (x, cos x, sin x)."""
    return ContactState(x, math.cos(x), math.sin(x))


@pytest.fixture(scope="module")
def fronts():
    out = {}
    for c in (0.8, 1.0, 2.0):
        m = toy_model(c)
        fps = find_fixed_points(m)
        out[c] = {round(fp.state.x, 6): trace_wavefront(fp, m) for fp in fps}
    return out


def test_ode_rhs_examples():
    m = toy_model(1.0)
    for s in (ContactState(HALF_PI, 0.0, 1.0), ContactState(-HALF_PI, 0.0, -1.0)):
        d = ode_rhs(s, m)
        assert max(abs(d.x), abs(d.p), abs(d.u)) <= 1e-15
    # direct substitution: (2p, -cos(x)u - sin(x)p, 2p^2 - (p^2 + sin(x)u - c)) = (2, 0, 2)
    d = ode_rhs(ContactState(0.0, 1.0, 0.0), m)
    assert (d.x, d.p, d.u) == (2.0, 0.0, 2.0)


def test_ode_rhs_generic_matches_quadratic():
    m = toy_model(0.7)
    g = general_model(m.h, m.lam, c=0.7, h_p=m.h_p, h_x=m.h_x, lam_x=m.lam_x)
    rng = np.random.default_rng(2)
    for x, p, u in rng.uniform(-3, 3, size=(20, 3)):
        a, b = ode_rhs(ContactState(x, p, u), m), ode_rhs(ContactState(x, p, u), g)
        assert np.allclose([a.x, a.p, a.u], [b.x, b.p, b.u], atol=1e-12)


def test_fixed_point_trajectory_is_constant():
    m = toy_model(1.0)
    tr = rk4_integrate(ContactState(HALF_PI, 0.0, 1.0), (0.0, 5.0), 1e-2, m)
    # the float nearest pi/2 has cos = 6e-17, so only round-off motion remains
    assert np.max(np.abs(tr.y - [HALF_PI, 0.0, 1.0])) <= 1e-15


def test_rk4_lands_on_endpoint_and_runs_backward():
    m = toy_model(1.0)
    s0 = on_shell_heteroclinic(0.3)
    tr = rk4_integrate(s0, (0.0, 1.0005), 1e-3, m)
    assert tr.t[-1] == 1.0005 and len(tr) == 1002
    back = rk4_integrate(tr.final, (1.0005, 0.0), 1e-3, m)
    assert abs(back.final.x - s0.x) < 1e-10 and abs(back.final.u - s0.u) < 1e-10


def test_rk4_blowup_raises():
    m = toy_model(1.0)
    with pytest.raises(IntegrationError) as exc:
        rk4_integrate(ContactState(1.0, 1.0, (1.0 - 1.0) / math.sin(1.0)), (0.0, 40.0), 1e-3, m)
    assert 0 < exc.value.t < 40


def test_shell_invariance_sample():
    m = toy_model(1.0)
    for x in np.linspace(-1.5, 1.5, 7):
        tr = rk4_integrate(on_shell_heteroclinic(x), (0.0, 20.0), 1e-3, m)
        assert np.max(np.abs(tr.energy(m) - 1.0)) <= 1e-8


def test_u_nondecreasing_on_shell():
    m = toy_model(1.0)
    for x in np.linspace(-1.5, 4.5, 9):
        tr = rk4_integrate(on_shell_heteroclinic(x), (0.0, 10.0), 1e-3, m)
        assert np.all(np.diff(tr.u) >= -1e-12)


def test_mirror_symmetry_sample():
    m = toy_model(1.0)
    s = on_shell_heteroclinic(0.4)
    a = rk4_integrate(s, (0.0, 10.0), 1e-3, m)
    b = rk4_integrate(ContactState(math.pi - s.x, -s.p, s.u), (0.0, 10.0), 1e-3, m)
    assert np.max(np.abs(a.x - (math.pi - b.x))) <= 1e-8
    assert np.max(np.abs(a.p + b.p)) <= 1e-8
    assert np.max(np.abs(a.u - b.u)) <= 1e-8


def test_find_fixed_points_toy():
    fps = find_fixed_points(toy_model(1.0))
    states = sorted((fp.state.x, fp.state.p, fp.state.u) for fp in fps)
    assert states == [(-HALF_PI, 0.0, -1.0), (HALF_PI, 0.0, 1.0)]
    for fp in fps:
        d = ode_rhs(fp.state, toy_model(1.0))
        assert math.hypot(d.x, d.p, d.u) <= 1e-12
    with pytest.raises(ConfigurationError):
        find_fixed_points(toy_model(0.0))


def test_find_fixed_points_newton_matches_closed_form():
    m = toy_model(1.0)
    g = general_model(m.h, m.lam, c=1.0, h_p=m.h_p, h_x=m.h_x, lam_x=m.lam_x)
    fps = find_fixed_points(g)
    xs = sorted(fp.state.x for fp in fps)
    assert len(fps) == 2
    assert xs == pytest.approx([-HALF_PI, HALF_PI], abs=1e-9)
    for fp in fps:
        J = linearize(FixedPointInfo(fp.state), m).jacobian
        assert np.allclose(fp.jacobian, J, atol=1e-6)


def test_linearize_examples():
    m = toy_model(1.0)
    up = linearize(FixedPointInfo(ContactState(HALF_PI, 0.0, 1.0)), m)
    assert up.jacobian.tolist() == [[0.0, 2.0], [1.0, -1.0]]
    assert up.eigenvalues == pytest.approx((-2.0, 1.0), abs=1e-14)
    v = up.unstable_eigvec
    assert v[0] > 0 and v[1] / v[0] == pytest.approx(0.5, abs=1e-14)
    lo = linearize(FixedPointInfo(ContactState(-HALF_PI, 0.0, -1.0)), m)
    assert lo.jacobian.tolist() == [[0.0, 2.0], [1.0, 1.0]]
    assert lo.eigenvalues == pytest.approx((-1.0, 2.0), abs=1e-14)
    assert lo.unstable_eigvec[1] / lo.unstable_eigvec[0] == pytest.approx(1.0, abs=1e-14)


def test_linearize_non_hyperbolic():
    m = toy_model(-1.0)
    with pytest.raises(NonHyperbolicError):
        linearize(FixedPointInfo(ContactState(HALF_PI, 0.0, -1.0)), m)


@pytest.mark.parametrize("c", [0.8, 1.0, 2.0])
def test_eigenvalue_formulas(c):
    m = toy_model(c)
    r = math.sqrt(1 + 8 * c)
    for fp in find_fixed_points(m):
        if fp.state.x > 0:
            want = ((-1 - r) / 2, (-1 + r) / 2)
            assert fp.jacobian.tolist() == [[0.0, 2.0], [c, -1.0]]
        else:
            want = ((1 - r) / 2, (1 + r) / 2)
            assert fp.jacobian.tolist() == [[0.0, 2.0], [c, 1.0]]
        assert abs(fp.eigenvalues[0] - want[0]) <= 1e-10
        assert abs(fp.eigenvalues[1] - want[1]) <= 1e-10


def test_wavefront_phi1_minimum_and_width(fronts):
    wf = fronts[1.0][round(HALF_PI, 6)]
    i = int(np.argmin(wf.u))
    assert wf.u[i] == 1.0 and wf.x[i] == HALF_PI
    assert wf.sigma >= math.pi
    assert wf.reasons == ("turning", "turning")


@pytest.mark.parametrize("c", [0.8, 1.0, 2.0])
def test_wavefront_mirror_symmetry(fronts, c):
    phi1 = fronts[c][round(HALF_PI, 6)]
    phi0 = fronts[c][round(-HALF_PI, 6)]
    for wf, centre in ((phi0, -HALF_PI), (phi1, HALF_PI)):
        lo, hi = wf.domain
        half = min(centre - lo, hi - centre)
        x = np.linspace(centre - half, centre + half, 2001)
        assert np.max(np.abs(wf(x) - wf(2 * centre - x))) <= 1e-6


@pytest.mark.parametrize("c", [0.8, 1.0, 2.0])
def test_wavefront_monotone_branches(fronts, c):
    for x_fp, wf in fronts[c].items():
        i = int(np.argmin(np.abs(wf.x - wf.source.state.x)))
        assert np.all(np.diff(wf.u[i:]) >= -1e-12)
        assert np.all(np.diff(wf.u[: i + 1]) <= 1e-12)


def test_wavefront_translation(fronts):
    m = toy_model(1.0)
    fp = find_fixed_points(m)[0]
    shifted = FixedPointInfo(ContactState(fp.state.x + 2 * math.pi, 0.0, fp.state.u))
    wf = fronts[1.0][round(fp.state.x, 6)]
    wf2 = trace_wavefront(linearize(shifted, m), m)
    x = np.linspace(*wf.domain, 3001)[1:-1]
    assert np.max(np.abs(wf(x) - wf2(x + 2 * math.pi))) <= 1e-8


def test_trace_eps_range():
    m = toy_model(1.0)
    fp = find_fixed_points(m)[0]
    with pytest.raises(ConfigurationError):
        trace_wavefront(fp, m, eps=1e-2)


def test_assemble_examples(grid2048):
    u0, u1 = assemble_solutions(toy_model(1.0), 1.0, grid2048)
    assert np.max(np.abs(u0.values - np.sin(grid2048.nodes))) <= 1e-3
    i = grid2048.nearest_node(HALF_PI)
    assert u1.values[i] == pytest.approx(1.0, abs=1e-12)
    assert u1.values.min() >= 1.0 - 1e-12
    for c in (0.8, 2.0):
        a, b = assemble_solutions(toy_model(c), c, grid2048)
        assert np.all(a.values <= b.values)
        assert b.values.min() >= c - 1e-12


def test_cross_pipeline_agreement(figure_cases):
    for c, case in figure_cases.items():
        assert np.max(np.abs(case.u0 - case.sg_u0)) <= 0.05, c
        assert np.max(np.abs(case.u1 - case.sg_u1)) <= 0.05, c
