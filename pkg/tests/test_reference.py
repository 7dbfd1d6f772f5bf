import math

import numpy as np
import pytest

from contact_hj.errors import DomainError, FamilyError
from contact_hj.model import GridFunction, make_grid, toy_model
from contact_hj.reference import (IntervalFamily, build_critical_solution, half_integral,
                                  phi_critical, u_ab)
from contact_hj.semigroup import default_step_params, evolve, residual_report

PI = math.pi
# int_0^{pi/2} sqrt(sin t) dt, halved and squared (frozen quadrature oracle)
ROOT_SIN_INTEGRAL = 1.1981402347355916
PHI_MID = 0.3588850055230646


def test_frozen_oracle_consistent():
    assert (ROOT_SIN_INTEGRAL / 2) ** 2 == pytest.approx(PHI_MID, abs=1e-15)
    assert 2 * half_integral(PI, 1.5 * PI) == pytest.approx(ROOT_SIN_INTEGRAL, abs=1e-11)


def test_phi_examples():
    assert phi_critical(PI) == 0.0
    assert phi_critical(1.5 * PI) == pytest.approx(PHI_MID, abs=1e-10)
    assert abs(phi_critical(1.5 * PI) - 0.358886) <= 1e-5


def test_phi_solves_profile_ode():
    h = 1e-5
    for x in (1.2 * PI, 1.5 * PI, 1.8 * PI):
        d = (phi_critical(x + h) - phi_critical(x - h)) / (2 * h)
        assert d == pytest.approx(math.sqrt(-math.sin(x) * phi_critical(x)), abs=1e-5)


def test_phi_domain():
    with pytest.raises(DomainError):
        phi_critical(1.0)
    with pytest.raises(DomainError):
        phi_critical(7.0)


def test_u_ab_examples():
    assert u_ab(PI, 2 * PI, PI / 4) == 0.0
    assert u_ab(PI, 2 * PI, 1.5 * PI) == pytest.approx(PHI_MID, abs=1e-10)
    a, b = PI + 0.2, PI + 1.4
    assert u_ab(a, b, a) == 0.0 and u_ab(a, b, b) == 0.0
    with pytest.raises(DomainError):
        u_ab(2.0, 4.0, 3.0)
    with pytest.raises(DomainError):
        u_ab(4.0, 4.0, 4.0)


def test_u_ab_is_min_of_branches():
    # the branches cross where the two integrals balance; that is the
    # arithmetic midpoint only for intervals symmetric about 3pi/2
    a, b = PI + 0.3, PI + 0.8
    m = 0.5 * (a + b)
    left = half_integral(a, m) ** 2
    right = half_integral(m, b) ** 2
    assert u_ab(a, b, m) == pytest.approx(min(left, right), abs=1e-14)
    assert u_ab(a, b, a + 0.01) == pytest.approx(half_integral(a, a + 0.01) ** 2, abs=1e-14)


def test_family_validation():
    with pytest.raises(FamilyError):
        IntervalFamily(((PI, PI + 1.0), (PI + 0.5, PI + 1.5)))
    with pytest.raises(DomainError):
        IntervalFamily(((2.0, 4.0),))
    fam = IntervalFamily(((PI + 1.2, PI + 1.9), (PI + 0.3, PI + 0.8)))
    assert fam.intervals[0][0] == PI + 0.3
    with pytest.raises(FamilyError):
        build_critical_solution(IntervalFamily(((PI, PI + 0.001),)), make_grid(256))


def test_build_examples():
    g = make_grid(2048)
    assert np.all(build_critical_solution(IntervalFamily(), g).values == 0.0)
    f = build_critical_solution(IntervalFamily(((PI, 2 * PI),)), g)
    x = g.nodes
    assert np.all(f.values[x <= PI] == 0.0)
    assert np.all(f.values >= 0.0)
    i = g.nearest_node(1.5 * PI)
    assert f.values[i] == pytest.approx(PHI_MID, abs=1e-12)
    two = build_critical_solution(IntervalFamily(((PI + 0.3, PI + 0.8), (PI + 1.2, PI + 1.9))), g)
    assert np.all(two.values >= 0.0)
    for j in range(0, g.n, 97):
        assert two.values[j] == pytest.approx(
            u_ab(PI + 0.3, PI + 0.8, x[j]) + u_ab(PI + 1.2, PI + 1.9, x[j]), abs=1e-12)


@pytest.mark.parametrize("fam", [((PI, 2 * PI),), ((PI + 0.3, PI + 0.8), (PI + 1.2, PI + 1.9))])
def test_family_members_are_solutions(fam):
    g = make_grid(2048)
    m = toy_model(0.0)
    f = build_critical_solution(IntervalFamily(fam), g)
    rr = residual_report(f, m)
    assert rr.passes(1e-3, "concave")
    assert len(rr.concave_kinks) >= 1
    sp = default_step_params(m, g, 1e-3)
    assert evolve(f, 1.0, m, sp).distance(f) <= 5e-3


def test_sin_passes_gate_at_level_one():
    g = make_grid(2048)
    rr = residual_report(GridFunction.from_callable(g, np.sin), toy_model(1.0))
    assert rr.passes(1e-4)
