import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polyperiodic.coefficients import Equation
from polyperiodic.counting import (Box, Contour, conjugate_pairing_distance, continuation_count,
                                   homotopy_family, isolate_zeros, perturb_constants, refine_zero,
                                   region_count, root_region, winding_number)
from polyperiodic.errors import (Diverged, EscapeOnContour, InvalidInput, SingularDerivative,
                                 UnsupportedDegree, ZeroOnContour)

from conftest import const_eq
from instances import rng_for, small_instance, theorem_1_1_instance


@pytest.mark.parametrize("n", [3, 4, 5])
def test_monomial_winding(n):
    assert winding_number(Equation.monomial(n, 1.0), Contour.circle(0, 0.3)) == n


def test_cubic_windings(cubic):
    assert winding_number(cubic, Contour.circle(2.0, 0.3)) == 1
    assert winding_number(cubic, Contour.circle(2.6, 0.3)) == 0
    # near 5 the real axis lies on a blow-up cut, so the circle leaves the domain
    with pytest.raises(EscapeOnContour):
        winding_number(cubic, Contour.circle(5.0, 0.3))


def test_zero_on_contour(cubic):
    with pytest.raises(ZeroOnContour):
        winding_number(cubic, Contour.circle(1.0, 1.0))


def test_contour_validation():
    with pytest.raises(InvalidInput):
        Contour.circle(0, 0.0)
    with pytest.raises(InvalidInput):
        Contour.box(1 + 1j, 1 + 2j)


def test_isolate_monomial():
    sols = isolate_zeros(Equation.monomial(3, 1.0), Contour.box(-0.5 - 0.5j, 0.5 + 0.5j))
    assert sols.certified and sols.total == 3
    assert len(sols.items) == 1
    assert abs(sols.items[0].c) < 1e-6 and sols.items[0].multiplicity == 3


def test_isolate_cubic(cubic):
    sols = isolate_zeros(cubic, Contour.box(-3 - 1j, 3 + 1j))
    assert sols.certified and sols.total == 3
    cs = sorted(it.c.real for it in sols.items)
    assert np.allclose(cs, [-2, 0, 2], atol=1e-10)
    assert all(it.multiplicity == 1 and it.residual <= 1e-8 for it in sols.items)


def test_isolate_complex_roots():
    eq = const_eq(3, 0.05, [1.0, 1.0, 0.0])
    sols = isolate_zeros(eq, Contour.box(-2 - 2j, 2 + 2j))
    assert sols.certified and sols.total == 3
    roots = np.roots([1, 0, 1, 1])
    for r in roots:
        assert min(abs(it.c - r) for it in sols.items) <= 1e-8
    assert conjugate_pairing_distance(sols.items) <= 1e-8


def test_refine_examples(cubic):
    c, res = refine_zero(cubic, 1.9)
    assert abs(c - 2) <= 1e-10 and res <= 1e-12
    with pytest.raises(SingularDerivative):
        refine_zero(Equation.monomial(3, 1.0), 0.01)
    c, res = refine_zero(const_eq(4, 1.0, [0.0, 0.4, 0.1, 0.0]), 0.0)
    assert c == 0 and res == 0


def test_refine_box_exit(cubic):
    with pytest.raises(Diverged):
        refine_zero(cubic, 1.2, box=Box(1.1 - 0.1j, 1.3 + 0.1j))


def test_serialization(cubic):
    sols = isolate_zeros(cubic, Contour.box(-3 - 1j, 3 + 1j))
    doc = json.loads(sols.to_json())
    assert doc["total"] == 3 and doc["certified"] is True
    lines = sols.to_csv().splitlines()
    assert lines[0] == "c_re,c_im,multiplicity,residual"
    assert len(lines) == 4
    assert float(lines[3].split(",")[0]) == pytest.approx(2.0, abs=1e-12)


def test_continuation_examples(cubic):
    rep = continuation_count(homotopy_family(cubic), 4, Contour.box(-3 - 1j, 3 + 1j))
    assert rep.constant and [e.count for e in rep.entries] == [3] * 5
    single = continuation_count(homotopy_family(Equation.monomial(4, 1.0)), 0, Contour.circle(0, 0.3))
    assert [(e.lam, e.count) for e in single.entries] == [(0.0, 4)]


def test_continuation_nonconstant_when_escaping():
    eq = const_eq(5, 1.0, [0.5, 2.0, 0.2, 0.0, 0.0])
    rep = continuation_count(homotopy_family(eq), 2, Contour.box(-1.6 - 1.6j, 1.6 + 1.6j))
    assert not rep.constant
    assert all(e.count is None and not e.certified for e in rep.entries)


def test_family_degree_policy():
    with pytest.raises(UnsupportedDegree):
        homotopy_family(const_eq(4, 1.0, [0, 1, 0, 0]), "1.2")
    fam = homotopy_family(const_eq(5, 1.0, [0.3, 2.0, 0.1, -0.2, 0.05]), "1.2")
    at0 = fam(0.0)
    assert [float(f(0.0)) for f in at0.coeffs] == [0.0, 2.0, 0.0, -0.2, 0.05]


def test_theorem_instance_counts():
    rng = rng_for(11)
    for n in (4, 5):
        eq, _ = theorem_1_1_instance(rng, n, 0.01)
        sols = isolate_zeros(eq, root_region(eq))
        assert sols.certified and sols.total == n


def test_children_sum_to_parent(cubic):
    parent = Box(-2.7 - 0.9j, 2.9 + 1.1j)
    w = winding_number(cubic, Contour(parent))
    kids = parent.split(0.4871, 0.5379)
    assert sum(winding_number(cubic, Contour(k)) for k in kids) == w == 3


@given(st.integers(0, 10_000))
def test_doubling_and_perturbation_keep_counts(seed):
    rng = rng_for(seed)
    n = int(rng.integers(3, 6))
    eq = small_instance(rng, n, 0.01, amp=1.5)
    region = root_region(eq)
    try:
        w = winding_number(eq, region)
    except (EscapeOnContour, ZeroOnContour):
        return
    assert w == n
    assert winding_number(eq, Contour(region.shape, 2 * region.min_samples)) == w
    assert winding_number(perturb_constants(eq, 1e-6), region) == w


@given(st.integers(0, 10_000))
def test_conjugate_closure(seed):
    rng = rng_for(seed)
    eq = small_instance(rng, int(rng.integers(3, 5)), 0.01, amp=1.5)
    sols = isolate_zeros(eq, root_region(eq))
    if sols.certified:
        assert sols.total == eq.n
        assert conjugate_pairing_distance(sols.items) <= 1e-8


def test_region_count_shortcuts_on_escape():
    eq = const_eq(3, 0.05, [0.0, -4.0, 0.0])
    assert region_count(eq, Contour.box(-5 - 1j, 5 + 1j)) == (None, False)
    assert region_count(eq, Contour.box(-3 - 1j, 3 + 1j)) == (3, True)


def test_threads_do_not_change_results(cubic):
    box = Contour.box(-3 - 1j, 3 + 1j)
    a = isolate_zeros(cubic, box, threads=1)
    b = isolate_zeros(cubic, box, threads=3)
    assert a.to_json() == b.to_json()
