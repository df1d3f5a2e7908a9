import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polyperiodic.coefficients import CoeffFn, Equation
from polyperiodic.displacement import (q, q_and_derivative, q_batch, q_prime, real_derivatives,
                                       scan_real_line)
from polyperiodic.errors import EscapedDomain
from polyperiodic.flow import DEFAULT_CONFIG

from conftest import const_eq
from fd import TIGHT, real_fd


def test_q_examples(cubic):
    assert q(Equation.monomial(2, 1.0), -1.0) == pytest.approx(0.5, abs=1e-10)
    assert q(const_eq(3, 1.0, [0.0, 0.3, -0.2]), 0.0) == 0
    assert abs(q(cubic, 2.0)) < 1e-14


def test_q_prime_examples(cubic):
    assert abs(q_prime(Equation.monomial(2, 1.0), 0.0)) < 1e-14
    assert q_prime(cubic, 2.0) == pytest.approx(math.exp(0.4) - 1, abs=1e-10)
    for n in (2, 3, 5):
        assert q_prime(Equation.monomial(n, 1.0), 0.0) == 0


def test_q_prime_escaped():
    with pytest.raises(EscapedDomain):
        q_prime(Equation.monomial(2, 2.0), 1.0)


def test_real_derivative_examples(cubic):
    rd = real_derivatives(cubic, 2.0)
    e = math.exp(0.4)
    assert rd.q1 == pytest.approx(e - 1, abs=1e-8)
    assert rd.q2 == pytest.approx(e * 1.5 * (e - 1), abs=1e-8)
    assert rd.q2 == pytest.approx(1.100574346276796, abs=1e-8)
    assert rd.G == pytest.approx(12 * (e - 1) / 8, abs=1e-8)
    flat = real_derivatives(const_eq(3, 1.0, [0.0, 0.0, 0.7]), 0.0)
    assert flat.E == 1 and flat.q1 == 0
    z3 = real_derivatives(Equation.monomial(3, 1.0), 0.0)
    assert (z3.q, z3.q1, z3.q2) == (0, 0, 0)
    assert z3.q3 == pytest.approx(6.0, abs=1e-10)


def test_q3_variant_selection():
    # the E(t)**2 weighting reproduces finite differences; the constant E(omega)**2 factor does not
    eq = Equation(4, 0.8, (CoeffFn((0.2,), ((1, 0.1, 0.0),), 0.8), CoeffFn.constant(-0.3, 0.8),
                           CoeffFn.constant(0.4, 0.8), CoeffFn.zero(0.8)))
    rd = real_derivatives(eq, 0.35)
    fd3 = real_fd(eq, 0.35)[2]
    assert abs(rd.q3 - fd3) <= 1e-4 * abs(fd3)
    assert abs(rd.q3_literal - fd3) > 1e-2 * abs(fd3)


def _small_eq(draw_vals, n, omega):
    it = iter(draw_vals)
    return Equation(n, omega, tuple(
        CoeffFn((next(it),), ((1, next(it), next(it)),), omega) for _ in range(n)))


small_eqs = st.integers(2, 5).flatmap(lambda n: st.builds(
    _small_eq, st.lists(st.floats(-0.17, 0.17), min_size=3 * n, max_size=3 * n),
    st.just(n), st.floats(0.1, 1.0)))


@given(small_eqs, st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_q_prime_matches_complex_fd(eq, x, y):
    c = complex(x, y)
    if abs(c) > 0.5:
        return
    qv, dq = q_and_derivative(eq, c)
    h = 1e-5
    fd = (q(eq, c + h, TIGHT) - q(eq, c - h, TIGHT)) / (2 * h)
    fdi = (q(eq, c + 1j * h, TIGHT) - q(eq, c - 1j * h, TIGHT)) / (2j * h)
    assert abs(fd - fdi) <= 1e-6 * max(abs(fd), 1e-3)  # holomorphic
    assert abs(dq - fd) <= 1e-6 * max(abs(fd), 1e-3)


@given(small_eqs, st.floats(-0.5, 0.5))
def test_real_derivatives_match_fd(eq, c):
    rd = real_derivatives(eq, c)
    d1, d2, d3 = real_fd(eq, c)
    scale = 1 + abs(rd.q)
    assert abs(rd.q1 - d1) <= 1e-5 * max(abs(d1), 1e-2 * scale)
    assert abs(rd.q2 - d2) <= 1e-4 * max(abs(d2), 1e-1 * scale)
    assert abs(rd.q3 - d3) <= 1e-3 * max(abs(d3), 1.0 * scale)


@given(st.floats(-0.8, 0.8))
def test_convexity_sign(c):
    # f = x**3 + 0.5x**2 + 0.1x has f_xx = 6x + 1 > 0 for x >= 0, and x(t) >= 0 when c >= 0
    eq = const_eq(3, 0.2, [0.0, 0.1, 0.5])
    c = abs(c)
    assert real_derivatives(eq, c).q2 > 0


@given(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6))
def test_conjugation(x, y):
    eq = const_eq(4, 0.5, [0.1, -0.3, 0.2, 0.05])
    c = complex(x, y)
    try:
        a = q(eq, c)
    except EscapedDomain:
        return
    assert abs(q(eq, c.conjugate()) - a.conjugate()) <= 1e-9 * (1 + abs(a))


def test_q_batch_agrees(cubic):
    cs = np.array([0.3 + 0.1j, -1.2, 1.7 - 0.4j])
    ok, qs, dqs = q_batch(cubic, cs)
    assert ok.all()
    for c, qv, dq in zip(cs, qs, dqs):
        a, b = q_and_derivative(cubic, c)
        assert abs(a - qv) < 1e-13 and abs(b - dq) < 1e-12


def test_scan_examples(cubic):
    res = scan_real_line(cubic, (-3.0, 3.0), 61)
    assert len(res.zeros) == 3
    assert np.allclose(res.zeros, [-2.0, 0.0, 2.0], atol=1e-9)
    assert all(b - a <= 1e-10 for a, b in res.brackets)
    none = scan_real_line(const_eq(4, 0.01, [1.0, 0.0, 0.0, 0.0]), (-20.0, 20.0), 81)
    assert none.zeros == [] and none.brackets == []
    z3 = scan_real_line(Equation.monomial(3, 1.0), (-0.5, 0.5), 11)
    assert z3.zeros == [0.0]


def test_scan_splits_at_escape_gaps():
    eq = const_eq(3, 0.05, [0.0, -4.0, 0.0])
    res = scan_real_line(eq, (-4.0, 4.0), 33)
    assert np.allclose(res.zeros, [-2.0, 0.0, 2.0], atol=1e-9)
    assert len(res.escape_boundaries) == 2
    # u = 1/z**2 solves u' = 8u - 2; the edge reaches the escape radius exactly at t = omega
    R = DEFAULT_CONFIG.radius_for(eq)
    edge = (0.25 + (R**-2 - 0.25) * math.exp(-0.4)) ** -0.5
    assert sorted(abs(e) for e in res.escape_boundaries) == pytest.approx([edge, edge], rel=1e-9)
