"""Zero counting for the displacement map by the argument principle.

Winding numbers are accumulated edge by edge from the unwrapped phase of
``q`` on an adaptively refined sample set.  Segments are split while the
phase jumps by a quarter turn or more, or while ``q`` disagrees with the
trapezoid integral of ``q'`` along the segment; the second test catches
contours that straddle a thin escape band between two completing samples.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .coefficients import CoeffFn, Equation
from .displacement import q_and_derivative, q_batch
from .errors import (Diverged, EscapedDomain, EscapeOnContour, InvalidInput, SingularDerivative,
                     UnsupportedDegree, ZeroOnContour)
from .flow import DEFAULT_CONFIG, IntegratorConfig

ZERO_TOL = 1e-12
CLUSTER_Q = 1e-9
CLUSTER_DIAM = 1e-6
HERMITE_ETA = 0.1
EDGE_EVAL_CAP = 20_000
LEVEL_CAP = 60
SPLITS = (0.4871, 0.5379, 0.4613, 0.5557)
REAL_SNAP = 1e-8


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidInput("circle radius must be positive")


@dataclass(frozen=True)
class Box:
    lo: complex
    hi: complex

    def __post_init__(self):
        lo, hi = complex(self.lo), complex(self.hi)
        if not (hi.real > lo.real and hi.imag > lo.imag):
            raise InvalidInput("box must have hi > lo in both coordinates")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def corners(self) -> tuple[complex, complex, complex, complex]:
        lo, hi = self.lo, self.hi
        return lo, complex(hi.real, lo.imag), hi, complex(lo.real, hi.imag)

    @property
    def center(self) -> complex:
        return 0.5 * (self.lo + self.hi)

    @property
    def diameter(self) -> float:
        return abs(self.hi - self.lo)

    def contains(self, c: complex, pad: float = 0.0) -> bool:
        return (self.lo.real - pad <= c.real <= self.hi.real + pad
                and self.lo.imag - pad <= c.imag <= self.hi.imag + pad)

    def split(self, fx: float, fy: float) -> list["Box"]:
        xm = self.lo.real + fx * (self.hi.real - self.lo.real)
        ym = self.lo.imag + fy * (self.hi.imag - self.lo.imag)
        x0, y0, x1, y1 = self.lo.real, self.lo.imag, self.hi.real, self.hi.imag
        return [Box(complex(x0, y0), complex(xm, ym)), Box(complex(xm, y0), complex(x1, ym)),
                Box(complex(xm, ym), complex(x1, y1)), Box(complex(x0, ym), complex(xm, y1))]

    def as_list(self) -> list[float]:
        return [self.lo.real, self.lo.imag, self.hi.real, self.hi.imag]


@dataclass(frozen=True)
class Contour:
    shape: Circle | Box
    min_samples: int = 64

    @classmethod
    def circle(cls, center: complex, radius: float, min_samples: int = 64) -> "Contour":
        return cls(Circle(complex(center), float(radius)), min_samples)

    @classmethod
    def box(cls, lo: complex, hi: complex, min_samples: int = 64) -> "Contour":
        return cls(Box(lo, hi), min_samples)


class SolutionItem(NamedTuple):
    c: complex
    multiplicity: int
    residual: float


@dataclass
class PeriodicSolutionSet:
    items: list[SolutionItem]
    certified: bool
    indeterminate: list[Box] = field(default_factory=list)
    # parent windings that disagreed with the sum over their children
    inconsistencies: int = 0

    @property
    def total(self) -> int:
        return sum(it.multiplicity for it in self.items)

    def to_dict(self) -> dict:
        return {
            "items": [{"c": [it.c.real, it.c.imag], "multiplicity": it.multiplicity,
                       "residual": it.residual} for it in self.items],
            "total": self.total,
            "certified": self.certified,
            "indeterminate": [b.as_list() for b in self.indeterminate],
            "inconsistencies": self.inconsistencies,
        }

    def to_json(self, **extra) -> str:
        return json.dumps({**self.to_dict(), **extra}, indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["c_re", "c_im", "multiplicity", "residual"])
        for it in self.items:
            w.writerow(["%.17g" % it.c.real, "%.17g" % it.c.imag, it.multiplicity,
                        "%.17g" % it.residual])
        return buf.getvalue()


class _Evaluator:
    """Cached batched evaluation of ``(ok, q, q')``."""

    def __init__(self, eq: Equation, cfg: IntegratorConfig, threads: int = 1):
        self.eq = eq
        self.cfg = cfg
        self.threads = max(1, int(threads))
        self.cache: dict[complex, tuple[bool, complex, complex]] = {}
        self.edges: dict[tuple, tuple[float, float]] = {}
        self.evaluations = 0

    def __call__(self, pts: np.ndarray):
        pts = np.asarray(pts, dtype=np.complex128)
        todo = [p for p in dict.fromkeys(pts.tolist()) if p not in self.cache]
        if todo:
            arr = np.array(todo, dtype=np.complex128)
            if self.threads > 1 and len(todo) >= 8 * self.threads:
                chunks = np.array_split(arr, self.threads)
                with ThreadPoolExecutor(self.threads) as ex:
                    parts = list(ex.map(lambda a: q_batch(self.eq, a, self.cfg), chunks))
                ok = np.concatenate([p[0] for p in parts])
                qv = np.concatenate([p[1] for p in parts])
                dq = np.concatenate([p[2] for p in parts])
            else:
                ok, qv, dq = q_batch(self.eq, arr, self.cfg)
            self.evaluations += len(todo)
            for p, o, a, b in zip(todo, ok.tolist(), qv.tolist(), dq.tolist()):
                self.cache[p] = (o, a, b)
        rows = [self.cache[p] for p in pts.tolist()]
        return (np.array([r[0] for r in rows], dtype=bool),
                np.array([r[1] for r in rows], dtype=np.complex128),
                np.array([r[2] for r in rows], dtype=np.complex128))


def _segment_path(a: complex, b: complex):
    d = b - a
    return (lambda s: a + s * d), (lambda s: np.full_like(s, d, dtype=np.complex128))


def _circle_path(center: complex, r: float):
    def gamma(s):
        return center + r * np.exp(2j * np.pi * s)

    def dgamma(s):
        return 2j * np.pi * r * np.exp(2j * np.pi * s)
    return gamma, dgamma


def _path_phase(ev: _Evaluator, gamma, dgamma, n0: int) -> tuple[float, float]:
    """Total phase change of ``q`` along ``gamma`` on ``[0, 1]`` and min ``|q|`` seen."""
    s = np.linspace(0.0, 1.0, max(n0, 2) + 1)
    doubled = False
    while True:
        pts = gamma(s)
        ok, qv, dq = ev(pts)
        if not ok.all():
            bad = pts[np.argmin(ok)]
            raise EscapeOnContour(f"contour point {complex(bad)} is outside the domain")
        mags = np.abs(qv)
        if mags.min() < ZERO_TOL:
            raise ZeroOnContour(f"|q| = {mags.min():.3g} at {complex(pts[np.argmin(mags)])}")
        dphi = np.angle(qv[1:] / qv[:-1])
        ds = np.diff(s)
        slope = dq * dgamma(s)
        herm = np.abs(qv[1:] - qv[:-1] - 0.5 * (slope[1:] + slope[:-1]) * ds)
        bad = (np.abs(dphi) >= 0.5 * np.pi) | (herm > HERMITE_ETA * np.maximum(mags[1:], mags[:-1]))
        if not bad.any():
            if doubled:
                return float(dphi.sum()), float(mags.min())
            # one doubling pass: the result must not change when every segment is halved
            mids = 0.5 * (s[1:] + s[:-1])
            ok2, q2, _ = ev(gamma(mids))
            if not ok2.all():
                raise EscapeOnContour("contour crosses the escape set between samples")
            half = np.angle(q2 / qv[:-1]) + np.angle(qv[1:] / q2)
            if np.all(np.abs(half - dphi) < 1e-6):
                return float(dphi.sum()), float(mags.min())
            bad = np.abs(half - dphi) >= 1e-6
        else:
            doubled = False
        seg_len = np.abs(gamma(s[1:]) - gamma(s[:-1]))
        scale = np.maximum(1.0, np.abs(pts[:-1]))
        tiny = bad & (seg_len < 1e-12 * scale)
        if tiny.any():
            i = int(np.argmax(tiny))
            if min(mags[i], mags[i + 1]) < CLUSTER_Q:
                raise ZeroOnContour(f"q nearly vanishes near {complex(pts[i])}")
            raise EscapeOnContour(f"q jumps across the escape set near {complex(pts[i])}")
        if len(s) > EDGE_EVAL_CAP:
            raise EscapeOnContour("winding did not converge within the sample budget")
        s = np.sort(np.concatenate([s, 0.5 * (s[1:] + s[:-1])[bad]]))
        doubled = bad.all()


def _edge_phase(ev: _Evaluator, a: complex, b: complex, n0: int) -> tuple[float, float]:
    key = (a, b, n0)
    if key in ev.edges:
        return ev.edges[key]
    rkey = (b, a, n0)
    if rkey in ev.edges:
        d, m = ev.edges[rkey]
        return -d, m
    val = _path_phase(ev, *_segment_path(a, b), n0)
    ev.edges[key] = val
    return val


def _to_integer(total_phase: float) -> int:
    w = total_phase / (2 * math.pi)
    k = round(w)
    if abs(w - k) > 0.25:
        raise EscapeOnContour(f"phase sum {w:.4f} turns is not near an integer")
    return int(k)


def _box_winding(ev: _Evaluator, box: Box, min_samples: int) -> tuple[int, float]:
    cs = box.corners
    n0 = max(4, min_samples // 4)
    total, mn = 0.0, math.inf
    for i in range(4):
        d, m = _edge_phase(ev, cs[i], cs[(i + 1) % 4], n0)
        total += d
        mn = min(mn, m)
    return _to_integer(total), mn


def _circle_winding(ev: _Evaluator, circ: Circle, min_samples: int) -> tuple[int, float]:
    d, m = _path_phase(ev, *_circle_path(circ.center, circ.radius), max(8, min_samples))
    return _to_integer(d), m


def winding_number(eq: Equation, contour: Contour, cfg: IntegratorConfig = DEFAULT_CONFIG,
                   threads: int = 1) -> int:
    """Number of zeros of ``q`` (with multiplicity) inside ``contour``.

    Raises :class:`EscapeOnContour` when the contour meets the escape set and
    :class:`ZeroOnContour` when ``q`` (nearly) vanishes on it.
    """
    ev = _Evaluator(eq, cfg, threads)
    if isinstance(contour.shape, Circle):
        return _circle_winding(ev, contour.shape, contour.min_samples)[0]
    return _box_winding(ev, contour.shape, contour.min_samples)[0]


def refine_zero(eq: Equation, c0: complex, cfg: IntegratorConfig = DEFAULT_CONFIG,
                box: Box | None = None, max_iter: int = 50) -> tuple[complex, float]:
    """Damped Newton iteration on ``q``.

    Raises :class:`SingularDerivative` when ``|q'|`` underflows or the steps
    shrink at the steady linear rate that marks a multiple zero, and
    :class:`Diverged` if the iterate escapes or leaves ``box``.
    """
    c = complex(c0)
    try:
        qv, dq = q_and_derivative(eq, c, cfg)
    except EscapedDomain as exc:
        raise Diverged(str(exc)) from exc
    ratios: list[float] = []
    prev_step = None
    for _ in range(max_iter):
        if abs(qv) <= ZERO_TOL * (1 + abs(c)):
            if len(ratios) >= 3 and all(0.3 <= r <= 0.95 for r in ratios[-3:]):
                raise SingularDerivative(f"linear convergence toward {c}: multiple zero")
            return c, abs(qv)
        if abs(dq) < 1e-14:
            raise SingularDerivative(f"|q'| = {abs(dq):.3g} at {c}")
        step = qv / dq
        lam = 1.0
        for _ in range(12):
            cn = c - lam * step
            if box is not None and not box.contains(cn, 1e-9 * box.diameter):
                raise Diverged(f"Newton left the search box at {cn}")
            try:
                qn, dqn = q_and_derivative(eq, cn, cfg)
            except EscapedDomain:
                lam *= 0.5
                continue
            if abs(qn) < abs(qv) or lam < 1.0 / 64:
                break
            lam *= 0.5
        else:
            raise Diverged(f"Newton step from {c} escapes at every damping level")
        taken = abs(lam * step)
        if prev_step:
            ratios.append(taken / prev_step)
        prev_step = taken
        c, qv, dq = cn, qn, dqn
        if taken <= 4e-16 * (1 + abs(c)):
            break
    if abs(qv) <= 1e3 * ZERO_TOL * (1 + abs(c)):
        return c, abs(qv)
    raise Diverged(f"Newton did not converge from {c0} (|q| = {abs(qv):.3g})")


def _snap_real(eq, c, cfg, box):
    if abs(c.imag) <= REAL_SNAP * (1 + abs(c)):
        try:
            cr, res = refine_zero(eq, complex(c.real, 0.0), cfg, None)
            if abs(cr - c) <= 1e-6 * (1 + abs(c)) and (box is None or box.contains(cr, 1e-9)):
                return complex(cr.real, 0.0), res
        except (Diverged, SingularDerivative):
            pass
    return None


def _power_centroid(ev: _Evaluator, c0: complex, r: float, k: int, M: int) -> complex | None:
    """``c0 + (1/k) (1/2 pi i) \\oint (z - c0) q'/q dz`` by the trapezoid rule."""
    u = r * np.exp(2j * np.pi * np.arange(M) / M)
    ok, qv, dq = ev(c0 + u)
    if not ok.all():
        return None
    return complex(c0 + np.mean(u * u * dq / qv) / k)


def _snap_centroid(c: complex) -> complex:
    # a conjugation-closed cluster has a real centroid
    if abs(c.imag) <= REAL_SNAP * (1 + abs(c)):
        return complex(c.real, 0.0)
    return c


def _item_at(ev: _Evaluator, c: complex, k: int) -> SolutionItem:
    ok, qv, _ = ev(np.array([c]))
    return SolutionItem(c, k, float(abs(qv[0])) if ok[0] else math.inf)


def _shrink_cluster(ev: _Evaluator, c0: complex, r: float, k: int,
                    min_samples: int) -> SolutionItem | None:
    """Trap ``k`` zeros in ever smaller circles around their centroid.

    Starts from a circle of radius ``r`` around ``c0``; returns ``None`` when
    a circle does not wind exactly ``k`` times (the zeros are spread out or the
    circle meets the escape set).  Stops once the circle diameter reaches the
    cluster tolerance or ``|q|`` on it approaches the noise floor.
    """
    M = max(64, min_samples)
    center = c0
    while True:
        try:
            w, qmin = _circle_winding(ev, Circle(center, r), min_samples)
        except (EscapeOnContour, ZeroOnContour):
            return None
        if w != k:
            return None
        cen = _power_centroid(ev, center, r, k, M)
        if cen is None or abs(cen - center) > r:
            return None
        if 2 * r <= CLUSTER_DIAM or qmin < CLUSTER_Q:
            return _item_at(ev, _snap_centroid(cen), k)
        # the centroid lies within r of every zero, so radius r/4 around it
        # either still winds k times or the zeros are spread wider than r/4
        center, r = cen, r / 4


def _cluster(ev: _Evaluator, box: Box, k: int, min_samples: int) -> SolutionItem:
    """Last-resort cluster item for a box that cannot be split further."""
    c0 = box.center
    for r in (max(10 * box.diameter, 1e-5), 0.75 * box.diameter):
        try:
            if _circle_winding(ev, Circle(c0, r), min_samples)[0] != k:
                continue
        except (EscapeOnContour, ZeroOnContour):
            continue
        cen = _power_centroid(ev, c0, r, k, max(64, min_samples))
        if cen is not None:
            return _item_at(ev, _snap_centroid(cen), k)
    return _item_at(ev, c0, k)


def isolate_zeros(eq: Equation, region: Contour | Box, max_depth: int = 5,
                  cfg: IntegratorConfig = DEFAULT_CONFIG, threads: int = 1) -> PeriodicSolutionSet:
    """Quadtree isolation of the zeros of ``q`` inside a box.

    ``max_depth`` bounds the subdivision of boxes whose boundary meets the
    escape set; those still unresolved at that depth are reported as
    indeterminate.  Boxes with a certified winding are split until each holds
    a simple zero that Newton can refine, or a cluster of diameter at most
    1e-6 (or with ``|q|`` at the 1e-9 level on its boundary) whose
    multiplicity is its winding number.
    """
    if isinstance(region, Contour):
        min_samples = region.min_samples
        region = region.shape
    else:
        min_samples = 64
    if not isinstance(region, Box):
        raise TypeError("isolate_zeros needs a box region")
    ev = _Evaluator(eq, cfg, threads)
    items: list[SolutionItem] = []
    indet: list[Box] = []
    state = {"bad": 0}

    def winding(box):
        try:
            return _box_winding(ev, box, min_samples)
        except EscapeOnContour:
            return "escape", 0.0

    def children_of(box):
        for fx, fy in zip(SPLITS, SPLITS[1:] + SPLITS[:1]):
            try:
                kids = box.split(fx, fy)
                return [(kid, *winding(kid)) for kid in kids]
            except ZeroOnContour:
                continue
        return None

    def simple(box):
        try:
            c, res = refine_zero(eq, box.center, cfg, box)
        except (Diverged, SingularDerivative):
            return None
        if not box.contains(c):
            return None
        snapped = _snap_real(eq, c, cfg, box)
        if snapped:
            c, res = snapped
        return SolutionItem(c, 1, res)

    def visit(box, w, qmin, esc_depth, level):
        if w == "escape":
            if esc_depth >= max_depth:
                indet.append(box)
                return
            kids = children_of(box)
            if kids is None:
                indet.append(box)
                return
            for kid in kids:
                visit(*kid, esc_depth + 1, level + 1)
            return
        if w == 0:
            return
        if w < 0:
            state["bad"] += 1
            indet.append(box)
            return
        if w == 1:
            it = simple(box)
            if it is not None:
                items.append(it)
                return
        if box.diameter <= CLUSTER_DIAM or level >= LEVEL_CAP:
            items.append(_cluster(ev, box, w, min_samples))
            return
        if w >= 2 or qmin < CLUSTER_Q:
            it = _shrink_cluster(ev, box.center, 0.5 * box.diameter * 1.02, w, min_samples)
            if it is not None:
                items.append(it)
                return
        kids = children_of(box)
        if kids is None:
            items.append(_cluster(ev, box, w, min_samples))
            return
        if all(k[1] != "escape" for k in kids) and sum(k[1] for k in kids) != w:
            state["bad"] += 1
        for kid in kids:
            visit(*kid, esc_depth, level + 1)

    try:
        root = winding(region)
    except ZeroOnContour:
        return PeriodicSolutionSet([], False, [region])
    visit(region, *root, 0, 0)
    items.sort(key=lambda it: (round(it.c.real, 9), round(it.c.imag, 9)))
    return PeriodicSolutionSet(items, certified=not indet and state["bad"] == 0,
                               indeterminate=indet, inconsistencies=state["bad"])


class ContinuationEntry(NamedTuple):
    lam: float
    count: int | None
    certified: bool


@dataclass
class ContinuationReport:
    entries: list[ContinuationEntry]

    @property
    def constant(self) -> bool:
        counts = {e.count for e in self.entries}
        return all(e.certified for e in self.entries) and len(counts) == 1

    def to_dict(self) -> dict:
        return {"entries": [{"lambda": e.lam, "count": e.count, "certified": e.certified}
                            for e in self.entries],
                "constant": self.constant}


def region_count(eq: Equation, region: Contour, cfg: IntegratorConfig = DEFAULT_CONFIG,
                 max_depth: int = 5, threads: int = 1) -> tuple[int | None, bool]:
    """Zero count in ``region``: its winding number, or a quadtree total when a
    zero sits on the boundary.  An escaping boundary point lies on a cut that
    reaches infinity, so no subdivision can certify the region."""
    try:
        return winding_number(eq, region, cfg, threads), True
    except EscapeOnContour:
        return None, False
    except ZeroOnContour:
        pass
    if not isinstance(region.shape, Box):
        return None, False
    sols = isolate_zeros(eq, region, max_depth, cfg, threads)
    return (sols.total if sols.certified else None), sols.certified


def continuation_count(family: Callable[[float], Equation], steps: int, region: Contour,
                       cfg: IntegratorConfig = DEFAULT_CONFIG, max_depth: int = 5,
                       threads: int = 1) -> ContinuationReport:
    if steps < 0:
        raise InvalidInput("steps must be non-negative")
    lams = [0.0] if steps == 0 else [j / steps for j in range(steps + 1)]
    entries = []
    for lam in lams:
        try:
            count, ok = region_count(family(lam), region, cfg, max_depth, threads)
        except EscapedDomain:
            count, ok = None, False
        entries.append(ContinuationEntry(lam, count, ok))
    return ContinuationReport(entries)


def homotopy_family(eq: Equation, theorem: str = "1.1") -> Callable[[float], Equation]:
    """The one-parameter family joining a simpler equation (``lam = 0``) to ``eq``.

    ``"1.1"`` scales every coefficient except ``P_1``; ``"1.2"`` scales
    ``P_0`` and ``P_2 .. P_{n-3}``, keeping ``P_1``, ``P_{n-2}``, ``P_{n-1}``.
    """
    n = eq.n
    if theorem == "1.1":
        keep = {1}
    elif theorem == "1.2":
        if n < 5:
            raise UnsupportedDegree("the 1.2 family needs n >= 5")
        keep = {1, n - 2, n - 1}
    else:
        raise ValueError(f"unknown family {theorem!r}")

    def family(lam: float) -> Equation:
        coeffs = [f if i in keep else f.scaled(lam) for i, f in enumerate(eq.coeffs)]
        return eq.replace(coeffs=coeffs)
    return family


def frozen_root_radius(eq: Equation, samples: int = 64) -> float:
    """Largest root modulus of the frozen polynomial ``f(., t)`` over sampled ``t``."""
    ts = np.linspace(0.0, eq.omega, samples) if not eq.all_constant else [0.0]
    return max(float(np.max(np.abs(np.roots(eq.frozen_polynomial(t))))) for t in ts)


def rho_region(eq: Equation) -> Contour:
    from .bounds.geometry import geometry
    r = geometry(eq).rho
    return Contour.box(complex(-r, -r), complex(r, r))


def root_region(eq: Equation, factor: float = 1.25) -> Contour:
    r = factor * frozen_root_radius(eq)
    return Contour.box(complex(-r, -r), complex(r, r))


def conjugate_pairing_distance(items: list[SolutionItem]) -> float:
    """Worst distance from an item's conjugate to an item of equal multiplicity."""
    worst = 0.0
    for it in items:
        d = min((abs(o.c - it.c.conjugate()) for o in items if o.multiplicity == it.multiplicity),
                default=math.inf)
        worst = max(worst, d)
    return worst


def perturb_constants(eq: Equation, eps: float) -> Equation:
    """Shift the constant term of every coefficient by ``eps``."""
    def bump(f: CoeffFn) -> CoeffFn:
        poly = list(f.poly) or [0.0]
        poly[0] += eps
        return CoeffFn(tuple(poly), f.harmonics, f.omega)
    return eq.replace(coeffs=[bump(f) for f in eq.coeffs])
