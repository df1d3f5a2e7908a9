import cmath
import math

import pytest
from hypothesis import given, strategies as st

from polyperiodic.bounds import geometry
from polyperiodic.coefficients import Equation
from polyperiodic.errors import InsideDisk, InvalidInput
from polyperiodic.flow import IntegratorConfig, blowup_time_monomial, classify_escape, integrate

from conftest import const_eq


def test_cubic_closed_form():
    out = integrate(Equation.monomial(3, 1.0), 1.0, 0.0, 0.25)
    assert out.completed
    assert abs(out.final - math.sqrt(2)) < 1e-8


def test_quadratic_blows_up_at_one():
    out = integrate(Equation.monomial(2, 2.0), 1.0, 0.0, 2.0)
    assert not out.completed
    assert out.escape_time == pytest.approx(1.0, abs=1e-6)
    assert out.arm == 0


def test_zero_is_a_solution_when_p0_vanishes():
    eq = const_eq(4, 1.0, [0.0, 0.7, -0.3, 0.2])
    out = integrate(eq, 0.0, 0.0, 1.0)
    assert out.completed and out.final == 0


def test_degenerate_horizon_is_identity():
    out = integrate(Equation.monomial(3, 1.0), 0.3 + 0.1j, 0.5, 0.5, with_variation=True)
    assert out.completed and out.final == 0.3 + 0.1j and out.variation == 1


def test_backward_escape_has_odd_arm():
    # z' = z**2 backwards from -1 blows up at t = -1 along the negative axis
    out = integrate(Equation.monomial(2, 2.0), -1.0, 0.0, -2.0)
    assert not out.completed
    assert out.escape_time == pytest.approx(-1.0, abs=1e-6)
    assert out.arm % 2 == 1


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("c", [0.8, 1.0, 1.7])
def test_monomial_escape_times(n, c):
    eq = Equation.monomial(n, 50.0)
    out = integrate(eq, c, 0.0, 50.0)
    t_star = blowup_time_monomial(n, c)
    assert t_star == pytest.approx(1.0 / ((n - 1) * c ** (n - 1)))
    assert abs(out.escape_time - t_star) <= 1e-6 * t_star


@given(st.integers(2, 6), st.floats(0.3, 3.0), st.floats(0.01, 1.0))
def test_escape_time_monotone(n, c, dc):
    eq = Equation.monomial(n, 100.0)
    t1 = integrate(eq, c, 0.0, 100.0).escape_time
    t2 = integrate(eq, c + dc, 0.0, 100.0).escape_time
    assert t2 < t1


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_conjugation_equivariance(x, y, p0, p1):
    eq = const_eq(3, 0.5, [p0, p1, 0.1])
    c = complex(x, y)
    a, b = integrate(eq, c, 0, 0.5), integrate(eq, c.conjugate(), 0, 0.5)
    assert a.completed == b.completed
    if a.completed:
        assert abs(a.final.conjugate() - b.final) <= 2e-10 * (1 + abs(a.final))


@given(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6))
def test_flow_property(x, y):
    eq = const_eq(3, 1.0, [0.2, -0.5, 0.3])
    c = complex(x, y)
    full = integrate(eq, c, 0, 1.0)
    half = integrate(eq, c, 0, 0.5)
    if full.completed and half.completed:
        rest = integrate(eq, half.final, 0.5, 1.0)
        assert rest.completed
        assert abs(rest.final - full.final) <= 1e-9 * (1 + abs(full.final))


@given(st.floats(-0.7, 0.7), st.floats(-0.7, 0.7))
def test_variation_matches_finite_difference(x, y):
    eq = const_eq(4, 1.0, [0.3, -0.4, 0.2, 0.1])
    c = complex(x, y)
    out = integrate(eq, c, 0, 1.0, with_variation=True)
    if not out.completed or out.zmax > 20:
        return
    h = 1e-6 * (1 + abs(c))
    fp, fm = integrate(eq, c + h, 0, 1.0), integrate(eq, c - h, 0, 1.0)
    fd = (fp.final - fm.final) / (2 * h)
    assert abs(fd - out.variation) <= 1e-5 * abs(out.variation)


def test_classify_escape_examples():
    eq3 = Equation.monomial(3, 1.0)
    rho = geometry(eq3).rho
    assert classify_escape(eq3, 2 * rho) == 0
    assert classify_escape(eq3, -2 * rho) == 2
    eq4 = const_eq(4, 1.0, [0.5, 0.0, 1.0, 0.0])
    rho4 = geometry(eq4).rho
    assert classify_escape(eq4, 2 * rho4 * cmath.exp(0.5j * math.pi)) is None
    with pytest.raises(InsideDisk):
        classify_escape(eq3, 0.5 * rho)


def test_geometry_partition():
    g = geometry(const_eq(5, 1.0, [0.1, 0.2, 0.0, 0.0, 0.3]))
    for r in (1.01 * g.rho, 3 * g.rho, 40 * g.rho):
        for j in range(720):
            z = cmath.rect(r, 2 * math.pi * j / 720)
            hits = [k for k in range(g.arms) if g.in_G(z, k)] + [
                ("H", k) for k in range(g.arms) if g.in_H(z, k)]
            assert len(hits) == 1


def test_config_validation():
    with pytest.raises(InvalidInput):
        IntegratorConfig(rel_tol=0)
    with pytest.raises(InvalidInput):
        IntegratorConfig(escape_radius=0.5)
