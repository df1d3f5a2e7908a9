"""Hypothesis checkers for the coefficient-bound theorems.

Every condition is a pointwise inequality in ``t``.  It is evaluated on a
uniform grid and the worst grid value is lowered by ``L h / 2``, where ``L``
bounds the Lipschitz constant of the slack function and ``h`` is the grid
spacing, so a non-negative reported margin holds on all of ``[0, omega]``.
For constant coefficients the slack term vanishes and margins are exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from ..coefficients import SAMPLES, Equation
from ..errors import BadC, BadK, UnsupportedDegree


@dataclass(frozen=True)
class Condition:
    name: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    strict: bool = False

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin,
                "pass": self.passed, "strict": self.strict}


@dataclass
class BoundsReport:
    theorem: str
    K: float | None
    conditions: list[Condition]
    predicted: list[str]
    notes: list[str] = field(default_factory=list)
    # conditions that gate extra claims without entering the verdict
    side_conditions: list[Condition] = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def min_margin(self) -> float:
        return min((c.margin for c in self.conditions), default=math.inf)

    def condition(self, name: str) -> Condition:
        for c in self.conditions + self.side_conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "K": self.K,
            "verdict": self.verdict,
            "conditions": [c.to_dict() for c in self.conditions],
            "side_conditions": [c.to_dict() for c in self.side_conditions],
            "predicted": list(self.predicted),
            "notes": list(self.notes),
        }

    def to_json(self, **extra) -> str:
        return json.dumps({**self.to_dict(), **extra}, indent=2, sort_keys=True)

    def table(self) -> str:
        rows = [f"{self.theorem}  K={self.K!r}  verdict={'PASS' if self.verdict else 'FAIL'}"]
        rows.append(f"{'condition':<34} {'lhs':>24} {'rhs':>24} {'margin':>24}  ok")
        for c in self.conditions + self.side_conditions:
            side = " (side)" if c in self.side_conditions else ""
            rows.append(f"{c.name + side:<34} {c.lhs:>24.17g} {c.rhs:>24.17g} {c.margin:>24.17g}  "
                        f"{'yes' if c.passed else 'NO'}")
        rows += [f"predicted: {p}" for p in self.predicted]
        rows += [f"note: {n}" for n in self.notes]
        return "\n".join(rows)


class _Grid:
    """Coefficient values on a uniform grid with their Lipschitz bounds."""

    def __init__(self, eq: Equation, samples: int = SAMPLES):
        self.eq = eq
        self.t = np.linspace(0.0, eq.omega, samples)
        self.h = eq.omega / (samples - 1)
        self.val = [np.broadcast_to(np.asarray(f(self.t), dtype=float), self.t.shape)
                    for f in eq.coeffs]
        self.lip = [f.lipschitz() for f in eq.coeffs]

    def abs(self, i: int) -> np.ndarray:
        return np.abs(self.val[i])

    def max_abs(self, i: int) -> float:
        """Certified upper bound of ``max |P_i|``."""
        f = self.eq.coeffs[i]
        return min(f.certified_bound(), float(self.abs(i).max()) + 0.5 * self.lip[i] * self.h)


def _check(grid: _Grid, name: str, lhs: np.ndarray, rhs: np.ndarray, lip: float,
           direction: str, strict: bool = False) -> Condition:
    """``lhs(t) <= rhs(t)`` (``direction='le'``) or ``>=`` on the grid plus Lipschitz slack."""
    lhs = np.broadcast_to(np.asarray(lhs, dtype=float), grid.t.shape)
    rhs = np.broadcast_to(np.asarray(rhs, dtype=float), grid.t.shape)
    g = rhs - lhs if direction == "le" else lhs - rhs
    j = int(np.argmin(g))
    margin = float(g[j]) - 0.5 * lip * grid.h
    passed = margin > 0 if strict else margin >= 0
    return Condition(name, float(lhs[j]), float(rhs[j]), margin, bool(passed), strict)


def _sin_term(n: int) -> float:
    # sin(pi/(n-2)) with the n = 3 value pinned to exact zero
    return 0.0 if n == 3 else math.sin(math.pi / (n - 2))


def _require_K(grid: _Grid, K: float) -> None:
    m0 = grid.max_abs(0)
    if not (K > m0):
        raise BadK(f"K = {K!r} must exceed the certified max |P_0| = {m0!r}")


def default_K(eq: Equation) -> float:
    return 2.0 * _Grid(eq).max_abs(0) + 1.0


def best_K(eq: Equation, checker: Callable[[Equation, float], BoundsReport]) -> tuple[float, float]:
    """Margin-maximizing ``K`` on ``(max|P_0|, 10 max|P_0| + 10]`` by bounded golden-section search."""
    m0 = _Grid(eq).max_abs(0)
    lo, hi = m0 * (1 + 1e-9) + 1e-12, 10.0 * m0 + 10.0

    def neg(K):
        return -checker(eq, K).min_margin

    res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6 * hi})
    return float(res.x), float(-res.fun)


def check_theorem_1_1(eq: Equation, K: float | None = None) -> BoundsReport:
    """Middle coefficients small against ``K - |P_0|`` and ``|P_1|`` dominant.

    For ``n = 3`` the middle index set is empty and ``sin(pi/(n-2)) = 0``;
    the check reduces to the ``|P_1|`` condition and is flagged as degenerate.
    """
    n = eq.n
    if n < 3:
        raise UnsupportedDegree("the 1.1 conditions need n >= 3")
    if K is None:
        K = default_K(eq)
    g = _Grid(eq)
    _require_K(g, K)
    s = _sin_term(n)
    a0, l0 = g.abs(0), g.lip[0]
    conds = []
    for i in range(2, n - 1):
        scale = s / ((n - 3) * K ** (i / n))
        conds.append(_check(g, f"|P{i}| <= middle cap", g.abs(i), (K - a0) * scale,
                            g.lip[i] + l0 * scale, "le"))
    top = g.abs(n - 1)
    rhs1 = (K + a0 + top + (K - a0) * s) / K ** (1 / n)
    lip1 = g.lip[1] + (l0 * (1 + s) + g.lip[n - 1]) / K ** (1 / n)
    conds.append(_check(g, "|P1| >= threshold", g.abs(1), rhs1, lip1, "ge"))
    predicted = [f"{n} complex periodic solutions"]
    notes, side = [], []
    if n == 3:
        notes.append("degenerate n = 3: no middle conditions, sin(pi/(n-2)) taken as 0")
    else:
        scale = s / ((n - 3) * K ** ((n - 1) / n))
        side.append(_check(g, f"|P{n - 1}| <= middle cap", top, (K - a0) * scale,
                           g.lip[n - 1] + l0 * scale, "le"))
        if side[0].passed:
            predicted.append("at most two positive and at most two negative real periodic solutions")
            if n % 2 == 1:
                predicted.append("at least one and at most three real periodic solutions")
        else:
            notes.append(f"P{n - 1} exceeds the middle cap: real-solution claims not asserted")
    return BoundsReport("T1_1", float(K), conds, predicted, notes, side)


def check_theorem_1_2(eq: Equation, K: float | None = None) -> BoundsReport:
    """``P_{n-2} <= 0`` helps: it enlarges both the middle cap and the ``|P_1|`` threshold."""
    n = eq.n
    if n < 5:
        raise UnsupportedDegree("the 1.2 conditions need n >= 5 (denominator n - 4)")
    if K is None:
        K = default_K(eq)
    g = _Grid(eq)
    _require_K(g, K)
    s = _sin_term(n)
    a0, l0 = g.abs(0), g.lip[0]
    kp = K ** ((n - 2) / n)
    pm, lm = g.val[n - 2], g.lip[n - 2]
    room = K - kp * pm - a0
    lip_room = kp * lm + l0
    conds = [_check(g, f"P{n - 2} <= 0", pm, 0.0, lm, "le")]
    for i in list(range(2, n - 2)) + [n - 1]:
        scale = s / ((n - 4) * K ** (i / n))
        conds.append(_check(g, f"|P{i}| <= middle cap", g.abs(i), room * scale,
                            g.lip[i] + lip_room * scale, "le"))
    f = (n - 3) / (n - 4) * s
    rhs1 = (K + a0 - kp * pm + f * room) / K ** (1 / n)
    lip1 = g.lip[1] + (l0 + kp * lm + f * lip_room) / K ** (1 / n)
    conds.append(_check(g, "|P1| >= threshold", g.abs(1), rhs1, lip1, "ge"))
    return BoundsReport("T1_2", float(K), conds,
                        [f"exactly {n} complex periodic solutions", f"at most {n} real periodic solutions"])


_T13 = {
    # variant: (min n, small indices start, large index, small cap, large threshold, claims)
    "i": (2, 1, 0, lambda n: n / (n - 1) ** 2, lambda n: (2 * n - 1) / (n - 1),
          ["at most one positive real periodic solution",
           "at most one negative real periodic solution"]),
    "ii": (3, 2, 1, lambda n: n / (n - 2) ** 2, lambda n: n * (2 * n - 3) / (n - 2),
           ["at most five real periodic solutions",
            "at most three positive and at most three negative"]),
    "iii": (4, 3, 2, lambda n: n / (n - 3) ** 2,
            lambda n: n * (n - 1) * (2 * n - 5) / (2 * (n - 3)),
            ["at most eight real periodic solutions",
             "at most five positive and at most five negative"]),
}


def check_theorem_1_3(eq: Equation, variant: str) -> BoundsReport:
    """Strict inequalities: one large coefficient, all higher ones small."""
    if variant not in _T13:
        raise ValueError(f"variant must be one of {sorted(_T13)}")
    n_min, start, big, cap_fn, thr_fn, claims = _T13[variant]
    n = eq.n
    if n < n_min:
        raise UnsupportedDegree(f"variant {variant} needs n >= {n_min}")
    g = _Grid(eq)
    cap, thr = cap_fn(n), thr_fn(n)
    conds = [_check(g, f"|P{i}| < {cap:.6g}", g.abs(i), cap, g.lip[i], "le", strict=True)
             for i in range(start, n)]
    conds.append(_check(g, f"|P{big}| > {thr:.6g}", g.abs(big), thr, g.lip[big], "ge", strict=True))
    return BoundsReport(f"T1_3_{variant}", None, conds, list(claims))


def check_calanchi_ruf(eq: Equation) -> BoundsReport:
    """Odd ``n`` and every ``|P_i| <= 1/(2n(n-1))`` for ``1 <= i <= n-1``."""
    n = eq.n
    g = _Grid(eq)
    cap = 1.0 / (2 * n * (n - 1))
    odd = n % 2 == 1
    conds = [Condition("n odd", float(n % 2), 1.0, 0.0 if odd else -1.0, odd)]
    conds += [_check(g, f"|P{i}| <= 1/(2n(n-1))", g.abs(i), cap, g.lip[i], "le")
              for i in range(1, n)]
    return BoundsReport("CR", None, conds, [f"at most {n} real periodic solutions"])


@dataclass(frozen=True)
class IlyashenkoBound:
    log_bound: float  # ln of the bound; inf when it overflows
    inner_exponent: float  # 1.5 (2C+3)**n
    log_excess: float  # ln(ln bound - ln 8) = ln(3C+2) + inner exponent, always finite
    overflow: bool


def ilyashenko_log_bound(C: float, n: int) -> IlyashenkoBound:
    """``ln(8 exp[(3C+2) exp(1.5 (2C+3)**n)])`` evaluated in log space."""
    if not C > 1:
        raise BadC(f"C must exceed 1, got {C!r}")
    if n < 1:
        raise ValueError("n must be a positive integer")
    try:
        inner = 1.5 * (2 * C + 3) ** n
    except OverflowError:
        inner = math.inf
    excess = math.log(3 * C + 2) + inner
    try:
        log_bound = math.log(8) + (3 * C + 2) * math.exp(inner)
    except OverflowError:
        log_bound = math.inf
    return IlyashenkoBound(log_bound, inner, excess, math.isinf(log_bound))


def check_aggregate(eq: Equation, theorem: str = "1.1", K: float | None = None) -> BoundsReport:
    """Replace the per-coefficient middle caps by one cap on a weighted sum.

    For 1.1: ``sum_i K^{i/n} |P_i(t)| <= (K - |P_0(t)|) sin(pi/(n-2))`` over the
    middle indices.  For 1.2 the sum over ``2..n-3`` is capped by the same
    room term, and including ``P_{n-1}`` by ``(n-3)/(n-4)`` times it.  The
    per-coefficient conditions imply these.
    """
    base = check_theorem_1_1(eq, K) if theorem == "1.1" else (
        check_theorem_1_2(eq, K) if theorem == "1.2" else None)
    if base is None:
        raise ValueError("aggregate mode supports theorems 1.1 and 1.2")
    n, K = eq.n, base.K
    g = _Grid(eq)
    s = _sin_term(n)
    a0, l0 = g.abs(0), g.lip[0]
    keep = [c for c in base.conditions if "middle cap" not in c.name]

    def weighted(idx):
        tot = sum(K ** (i / n) * g.abs(i) for i in idx)
        lip = sum(K ** (i / n) * g.lip[i] for i in idx)
        return np.broadcast_to(np.asarray(tot, dtype=float), g.t.shape), lip

    if theorem == "1.1":
        idx = list(range(2, n - 1))
        extra = []
        if idx:
            tot, lip = weighted(idx)
            extra.append(_check(g, "weighted middle sum <= cap", tot, (K - a0) * s, lip + l0 * s, "le"))
    else:
        kp = K ** ((n - 2) / n)
        room = K - kp * g.val[n - 2] - a0
        lip_room = kp * g.lip[n - 2] + l0
        tot, lip = weighted(range(2, n - 2))
        extra = [_check(g, "weighted middle sum <= cap", tot, room * s, lip + lip_room * s, "le")]
        tot2, lip2 = weighted(list(range(2, n - 2)) + [n - 1])
        f = (n - 3) / (n - 4)
        extra.append(_check(g, f"weighted sum with P{n - 1} <= cap", tot2, f * room * s,
                            lip2 + f * lip_room * s, "le"))
    conds = keep[:1] + extra + keep[1:] if theorem == "1.2" else extra + keep
    return BoundsReport(base.theorem + "_aggregate", K, conds, base.predicted, base.notes,
                        base.side_conditions)
