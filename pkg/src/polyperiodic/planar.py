"""Rigid planar systems and their limit cycles.

The system

    x' = lam x - y + x (R_1 + ... + R_{n-1}),   y' = x + lam y + y (R_1 + ... + R_{n-1})

with ``R_i`` homogeneous of degree ``i`` has ``theta' = 1``, so in polar form
``dr/dtheta = R_{n-1}(theta) r**n + ... + R_1(theta) r**2 + lam r``.  Limit
cycles are the positive ``2 pi``-periodic solutions of this scalar equation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Literal, NamedTuple

import numpy as np

from .bounds.theorems import BoundsReport, Condition, _check, _Grid, _sin_term
from .coefficients import CoeffFn, Equation, certified_range, certified_sign
from .displacement import q_prime, scan_real_line
from .errors import EscapedDomain, IndefiniteLeading, InvalidInput, UnsupportedDegree
from .flow import DEFAULT_CONFIG, IntegratorConfig

TWO_PI = 2 * math.pi
NEUTRAL_TOL = 1e-10


@dataclass(frozen=True)
class PlanarSystem:
    """``lam`` and ``R[i-1]`` = coefficients of ``R_i`` on ``x**i, x**(i-1) y, ..., y**i``."""

    lam: float
    R: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise InvalidInput("lambda must be finite")
        R = tuple(tuple(float(v) for v in r) for r in self.R)
        if not R:
            raise InvalidInput("R: at least R_1 is required")
        for i, r in enumerate(R, start=1):
            if len(r) != i + 1:
                raise InvalidInput(f"R[{i - 1}]: R_{i} needs {i + 1} coefficients, got {len(r)}")
            if not all(math.isfinite(v) for v in r):
                raise InvalidInput(f"R[{i - 1}]: coefficients must be finite")
        object.__setattr__(self, "R", R)

    @property
    def n(self) -> int:
        return len(self.R) + 1

    def R_at(self, i: int, x, y):
        coef = self.R[i - 1]
        return sum(c * x ** (i - j) * y**j for j, c in enumerate(coef))

    def vector_field(self, x, y):
        s = sum(self.R_at(i, x, y) for i in range(1, self.n))
        return self.lam * x - y + x * s, x + self.lam * y + y * s

    def to_dict(self) -> dict[str, Any]:
        return {"lambda": self.lam, "R": [list(r) for r in self.R]}

    @classmethod
    def from_dict(cls, data: Any) -> "PlanarSystem":
        if not isinstance(data, dict):
            raise InvalidInput("system: expected a JSON object")
        if "lambda" not in data:
            raise InvalidInput("lambda: missing")
        if "R" not in data or not isinstance(data["R"], list):
            raise InvalidInput("R: expected a list of coefficient lists")
        lam = data["lambda"]
        if isinstance(lam, bool) or not isinstance(lam, (int, float)):
            raise InvalidInput("lambda: expected a number")
        for i, r in enumerate(data["R"]):
            if not isinstance(r, list) or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool) for v in r):
                raise InvalidInput(f"R[{i}]: expected a list of numbers")
        return cls(float(lam), tuple(tuple(r) for r in data["R"]))


def _laurent_power(p: int, q: int) -> np.ndarray:
    """Coefficients of ``cos**p sin**q`` in ``e^{ik theta}``, ``k = -(p+q) .. p+q``."""
    acc = np.array([1.0 + 0j])
    cos_ = np.array([0.5, 0.0, 0.5], dtype=complex)  # e^{-i}, 1, e^{i}
    sin_ = np.array([-0.5 / 1j, 0.0, 0.5 / 1j], dtype=complex)
    for _ in range(p):
        acc = np.convolve(acc, cos_)
    for _ in range(q):
        acc = np.convolve(acc, sin_)
    return acc


def trig_restriction(coef: tuple[float, ...]) -> CoeffFn:
    """Exact ``R(cos theta, sin theta)`` of a homogeneous polynomial as a harmonic sum."""
    d = len(coef) - 1
    acc = np.zeros(2 * d + 1, dtype=complex)
    for j, c in enumerate(coef):
        if c:
            acc += c * _laurent_power(d - j, j)
    c0 = float(acc[d].real)
    harm = []
    for k in range(1, d + 1):
        ck = acc[d + k]
        a, b = 2 * ck.real, -2 * ck.imag
        if abs(a) < 1e-15 * (1 + abs(b)):
            a = 0.0
        if abs(b) < 1e-15 * (1 + abs(a)):
            b = 0.0
        if a or b:
            harm.append((k, float(a), float(b)))
    return CoeffFn((c0,) if c0 else (), tuple(harm), TWO_PI)


def polar_reduce(sys: PlanarSystem) -> Equation:
    """The radial equation over ``theta in [0, 2 pi]``; the leading coefficient is kept.

    ``P_0 = 0``, ``P_1 = lam``, ``P_{i+1} = R_i(cos, sin)``, ``Pn = R_{n-1}(cos, sin)``.
    """
    n = sys.n
    coeffs = [CoeffFn.zero(TWO_PI), CoeffFn.constant(sys.lam, TWO_PI)]
    coeffs += [trig_restriction(sys.R[i - 1]) for i in range(1, n - 1)]
    return Equation(n, TWO_PI, tuple(coeffs), trig_restriction(sys.R[-1]), check_leading=False)


class Cycle(NamedTuple):
    r0: float
    stability: Literal["stable", "unstable", "neutral"]
    q_prime: float


@dataclass
class LimitCycleReport:
    cycles: list[Cycle] | None  # None when the leading coefficient is indefinite
    origin_stable: bool
    corollary_verdicts: list[BoundsReport] = field(default_factory=list)
    count_bound: int | None = None
    r_max: float | None = None

    def to_dict(self) -> dict:
        return {
            "cycles": None if self.cycles is None else [
                {"r0": c.r0, "stability": c.stability, "q_prime": c.q_prime} for c in self.cycles],
            "origin_stable": self.origin_stable,
            "count_bound": self.count_bound,
            "r_max": self.r_max,
            "corollary_verdicts": [r.to_dict() for r in self.corollary_verdicts],
        }

    def to_json(self, **extra) -> str:
        return json.dumps({**self.to_dict(), **extra}, indent=2, sort_keys=True)


def _parts(obj: PlanarSystem | Equation) -> tuple[Equation, float, CoeffFn, CoeffFn]:
    """Reduced equation, ``lam``, ``R_{n-1}`` and ``R_1`` on the circle."""
    if isinstance(obj, PlanarSystem):
        eq = polar_reduce(obj)
        lam = obj.lam
    else:
        eq = obj
        p1 = eq.coeffs[1]
        if not p1.is_constant or not eq.coeffs[0].is_zero:
            raise InvalidInput("a reduced equation needs P_0 = 0 and a constant P_1 = lambda")
        lam = float(p1(0.0))
    lead = eq.leading if eq.leading is not None else CoeffFn.constant(1.0, eq.omega)
    r1 = eq.coeffs[2] if eq.n >= 3 else lead
    return eq, lam, lead, r1


def _origin_stable(lam: float, r1: CoeffFn) -> bool:
    if lam < 0:
        return True
    if lam == 0:
        return _mean(r1) * r1.omega < 0
    return False


def _mean(f: CoeffFn) -> float:
    # average over [0, omega]: harmonics integrate to zero
    return sum(c * f.omega**j / (j + 1) for j, c in enumerate(f.poly))


_CAPS = {"i": 2, "ii": None, "iii": 3, "iv": 5}
_MIN_N = {"i": 4, "ii": 5, "iii": 3, "iv": 4}


def check_corollary_4_1(obj: PlanarSystem | Equation, variant: str) -> BoundsReport:
    """Coefficient conditions bounding the number of limit cycles.

    Accepts a :class:`PlanarSystem` or its reduced radial equation (useful when
    the leading restriction should be a constant, which no odd-degree
    homogeneous polynomial achieves on the circle).  ``|R_i|`` is bounded on
    the unit circle, i.e. on the coefficients that enter the radial equation.
    """
    if variant not in _CAPS:
        raise ValueError(f"variant must be one of {sorted(_CAPS)}")
    eq, lam, lead, r1 = _parts(obj)
    n = eq.n
    if n < _MIN_N[variant]:
        raise UnsupportedDegree(f"variant {variant} needs n >= {_MIN_N[variant]}")
    if certified_sign(lead) == 0:
        raise IndefiniteLeading("R_{n-1} is not certified sign-definite on the unit circle")
    m, M = certified_range(lead)
    g = _Grid(eq)
    s = _sin_term(n)
    alam = abs(lam)
    conds: list[Condition] = []
    notes: list[str] = []

    def small(i, cap, strict=False):
        op = "<" if strict else "<="
        return _check(g, f"|R{i}| {op} {cap:.6g}", g.abs(i + 1), cap, g.lip[i + 1], "le", strict)

    if variant == "i":
        k = m * s / (n - 3)
        conds += [small(i, k) for i in range(1, n - 1)]
        thr = M + m * (n - 2) * s / (n - 3)
        conds.append(Condition("|lambda| >= threshold", alam, thr, alam - thr, alam >= thr))
        cap = 2
    elif variant == "ii":
        j = n - 3
        H = g.max_abs(j + 1)
        conds.append(_check(g, f"R{j} <= 0", g.val[j + 1], 0.0, g.lip[j + 1], "le"))
        k = m * s / (n - 4)
        conds += [small(i, k) for i in range(1, n - 1) if i != j]
        thr = M + H + m * (n - 3) * s / (n - 4)
        conds.append(Condition("|lambda| >= threshold", alam, thr, alam - thr, alam >= thr))
        cap = n - 1
    elif variant == "iii":
        k = n * m / (n - 2) ** 2
        conds += [small(i, k, True) for i in range(1, n - 1)]
        thr = n * M * (2 * n - 3) / (n - 2)
        conds.append(Condition("|lambda| > threshold", alam, thr, alam - thr, alam > thr, True))
        cap = 3
    else:
        k = n * m / (n - 3) ** 2
        conds += [small(i, k, True) for i in range(2, n - 1)]
        thr = n * M * (n - 1) * (2 * n - 5) / (2 * (n - 3))
        conds.append(_check(g, f"|R1| > {thr:.6g}", g.abs(2), thr, g.lip[2], "ge", True))
        if isinstance(obj, PlanarSystem):
            notes.append("R_1 is linear, so |R_1| vanishes somewhere on the circle")
        cap = 5
    predicted = [f"at most {cap} limit cycles"]
    exists = lam < 0 or (variant == "iv" and lam == 0 and _mean(r1) < 0)
    if exists:
        predicted.append("at least one limit cycle")
        predicted.append("the origin is stable and the limit cycle is unstable")
    notes.append(f"m = {m!r}, M = {M!r}")
    return BoundsReport(f"C4_1_{variant}", None, conds, predicted, notes)


def cycle_radius_bound(eq: Equation, lam: float, lead: CoeffFn) -> float:
    """Radius beyond which ``|R_{n-1}| r**n`` dominates every other term of ``dr/dtheta``."""
    m, _ = certified_range(lead)
    g = _Grid(eq)
    rest = abs(lam) + sum(g.max_abs(i) for i in range(2, eq.n))
    return 1.0 + rest / m


def count_limit_cycles(sys: PlanarSystem, cfg: IntegratorConfig = DEFAULT_CONFIG,
                       grid: int = 400) -> LimitCycleReport:
    """Positive periodic solutions of the radial equation, with stability.

    The radial equation is integrated with its leading coefficient in place.
    The scan covers ``(0, r_max]`` where ``r_max`` exceeds the Cauchy-type
    bound past which ``dr/dtheta`` has the sign of ``R_{n-1}``, so no periodic
    orbit can start beyond it.
    """
    eq, lam, lead, r1 = _parts(sys)
    verdicts = []
    for v in ("i", "ii", "iii", "iv"):
        try:
            verdicts.append(check_corollary_4_1(sys, v))
        except (UnsupportedDegree, IndefiniteLeading):
            pass
    passing = [_CAPS[r.theorem.split("_")[-1]] or sys.n - 1 for r in verdicts if r.verdict]
    bound = min(passing) if passing else None
    origin = _origin_stable(lam, r1)
    if certified_sign(lead) == 0:
        return LimitCycleReport(None, origin, verdicts, bound)
    r_max = 1.1 * cycle_radius_bound(eq, lam, lead)
    scan = scan_real_line(eq, (1e-4 * r_max, r_max), grid, cfg)
    cycles = []
    for r0, (a, b) in zip(scan.zeros, scan.brackets):
        if r0 <= 0:
            continue
        d = None
        # a cycle on the edge of the escape set may only be reachable from one side
        for r in (r0, a, b):
            try:
                d = q_prime(eq, r, cfg).real
                break
            except EscapedDomain:
                continue
        if d is None:
            continue
        st = "neutral" if abs(d) < NEUTRAL_TOL else ("unstable" if d > 0 else "stable")
        cycles.append(Cycle(float(r0), st, float(d)))
    return LimitCycleReport(cycles, origin, verdicts, bound, r_max)
