"""The displacement map ``q(c) = z(omega, c) - c`` and its derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .coefficients import Equation
from .errors import EscapedDomain, StepLimitExceeded
from .flow import DEFAULT_CONFIG, RADIUS_GROWTH, FlowOutcome, IntegratorConfig, integrate

BRACKET_WIDTH = 1e-10


def displacement(eq: Equation, c: complex, cfg: IntegratorConfig = DEFAULT_CONFIG,
                 with_derivative: bool = False) -> FlowOutcome:
    return integrate(eq, c, 0.0, eq.omega, cfg, with_variation=with_derivative)


def _completed(eq, c, cfg, with_derivative) -> FlowOutcome:
    out = displacement(eq, c, cfg, with_derivative)
    if not out.completed:
        raise EscapedDomain(f"solution from c={complex(c)} escapes near t={out.escape_time:.6g}")
    return out


def q(eq: Equation, c: complex, cfg: IntegratorConfig = DEFAULT_CONFIG) -> complex:
    """``z(omega, c) - c``; raises :class:`EscapedDomain` when ``c`` is not in Q."""
    return _completed(eq, c, cfg, False).offset


def q_prime(eq: Equation, c: complex, cfg: IntegratorConfig = DEFAULT_CONFIG) -> complex:
    return _completed(eq, c, cfg, True).variation - 1.0


def q_and_derivative(eq: Equation, c: complex,
                     cfg: IntegratorConfig = DEFAULT_CONFIG) -> tuple[complex, complex]:
    out = _completed(eq, c, cfg, True)
    return out.offset, out.variation - 1.0


def q_batch(eq: Equation, cs, cfg: IntegratorConfig = DEFAULT_CONFIG, with_derivative: bool = True):
    """Vectorized ``q``: returns ``(ok, q, dq)`` arrays; ``ok`` is False for escapes.

    Raises :class:`StepLimitExceeded` if any trajectory stalls.
    """
    cs = np.ascontiguousarray(np.asarray(cs, dtype=np.complex128).ravel())
    pk = eq.packed
    status, qv, dq, _ = K.displacement_batch(
        cs, with_derivative, eq.omega, cfg.rel_tol, cfg.abs_tol, cfg.radius_for(eq),
        RADIUS_GROWTH, cfg.max_steps, pk.n, pk.omega, pk.poly, pk.hk, pk.ha, pk.hb)
    stalled = (status == K.STEP_LIMIT) | (status == K.UNDERFLOW)
    if stalled.any():
        raise StepLimitExceeded(f"integration stalled from c={cs[np.argmax(stalled)]}")
    return status == K.COMPLETED, qv, dq


@dataclass(frozen=True)
class RealDerivatives:
    """``q`` and its first three derivatives at a real ``c``.

    ``q3`` integrates ``E(t,c)**2 f_3`` (the variational recursion); ``q3_literal``
    uses the constant factor ``E(omega,c)**2`` in front of ``int f_3 dt``.
    """

    q: float
    q1: float
    q2: float
    q3: float
    E: float
    G: float
    q3_literal: float = field(default=math.nan)


def real_derivatives(eq: Equation, c: float, cfg: IntegratorConfig = DEFAULT_CONFIG) -> RealDerivatives:
    c = float(c)
    pk = eq.packed
    y0 = np.zeros(5, dtype=np.complex128)
    radius = max(cfg.radius_for(eq), RADIUS_GROWTH * abs(c))
    status, s_end, y, steps, _, _ = K.integrate(
        K.MODE_REAL, complex(c), 0.0, eq.omega, y0, cfg.rel_tol, cfg.abs_tol, radius,
        cfg.max_steps, pk.n, pk.omega, pk.poly, pk.hk, pk.ha, pk.hb)
    if status == K.ESCAPED:
        raise EscapedDomain(f"real solution from c={c} escapes near t={s_end:.6g}")
    if status != K.COMPLETED:
        raise StepLimitExceeded(f"integration stalled at t={s_end:.6g} after {steps} steps")
    qv, L, G, H, F = (float(v.real) for v in y)
    E = math.exp(L)
    return RealDerivatives(
        q=qv, q1=E - 1.0, q2=E * G, q3=E * (1.5 * G * G + H), E=E, G=G,
        q3_literal=E * (1.5 * G * G + E * E * F))


@dataclass
class ScanResult:
    zeros: list[float]
    brackets: list[tuple[float, float]]
    escape_boundaries: list[float]
    escaped: list[float]  # grid points that left the domain


def _real_q(eq, c, cfg):
    out = displacement(eq, c, cfg)
    return out.offset.real if out.completed else None


def _real_eval(eq, c, cfg):
    """``(q, None)`` when ``c`` completes, else ``(None, sign of the escape)``."""
    out = displacement(eq, c, cfg)
    if out.completed:
        return out.offset.real, None
    return None, math.copysign(1.0, out.z_cross.real)


def _bisect_zero(eq, a, qa, b, qb, cfg, width=BRACKET_WIDTH):
    while abs(b - a) > width:
        m = 0.5 * (a + b)
        if m == a or m == b:
            break
        qm = _real_q(eq, m, cfg)
        if qm is None:  # not expected inside a completing run; keep the completing side
            b = m
            continue
        if qm == 0.0:
            return m, m
        if (qm > 0) == (qa > 0):
            a, qa = m, qm
        else:
            b, qb = m, qm
    return a, b


def _bisect_boundary(eq, good, bad, cfg, width=BRACKET_WIDTH):
    """Shrink ``[good, bad]`` around the edge of the domain.

    Returns ``(c_in, q_in, c_out, sign)``: the innermost completing point, its
    ``q``, the nearest escaping point and the sign of its escape direction.
    """
    q_good = _real_q(eq, good, cfg)
    _, sign = _real_eval(eq, bad, cfg)
    while abs(bad - good) > width:
        m = 0.5 * (good + bad)
        if m == good or m == bad:
            break
        qm, sm = _real_eval(eq, m, cfg)
        if qm is None:
            bad, sign = m, sm
        else:
            good, q_good = m, qm
    return good, q_good, bad, sign


def scan_real_line(eq: Equation, interval: tuple[float, float], grid: int,
                   cfg: IntegratorConfig = DEFAULT_CONFIG) -> ScanResult:
    """Bracket the real zeros of ``q`` on ``interval`` by sign changes on a grid.

    Escaping grid points split the interval: the edge of the domain is located
    by bisection and the last completing value joins its run, so brackets never
    straddle an escape gap.
    """
    if grid < 2:
        raise ValueError("grid must be at least 2")
    lo, hi = float(interval[0]), float(interval[1])
    cs = [float(c) for c in np.linspace(lo, hi, grid)]
    qs = [_real_q(eq, c, cfg) for c in cs]
    # runs of (c, q) separated by None at escape gaps; a real solution can only
    # leave through +-infinity, so q tends to the escape sign at a gap edge and
    # the escaping end point enters the run with q = +-inf
    pts: list[tuple[float, float] | None] = []
    edges: list[float] = []
    for i, (c, qv) in enumerate(zip(cs, qs)):
        if i > 0 and (qs[i - 1] is None) != (qv is None):
            if qv is None:
                cin, qin, cout, sgn = _bisect_boundary(eq, cs[i - 1], c, cfg)
                pts += [(cin, qin), (cout, sgn * math.inf), None]
            else:
                cin, qin, cout, sgn = _bisect_boundary(eq, c, cs[i - 1], cfg)
                pts += [None, (cout, sgn * math.inf), (cin, qin)]
            edges.append(0.5 * (cin + cout))
        if qv is not None:
            pts.append((c, qv))
        elif not pts or pts[-1] is not None:
            pts.append(None)
    zeros: list[float] = []
    brackets: list[tuple[float, float]] = []
    for i, p in enumerate(pts):
        if p is None:
            continue
        c, qv = p
        if qv == 0.0:
            if not zeros or abs(zeros[-1] - c) > BRACKET_WIDTH:
                zeros.append(c)
                brackets.append((c, c))
            continue
        nxt = pts[i + 1] if i + 1 < len(pts) else None
        if nxt is None:
            continue
        c2, q2 = nxt
        if q2 != 0.0 and (q2 > 0) != (qv > 0) and c2 != c:
            if math.isinf(qv) or math.isinf(q2):
                a, b = min(c, c2), max(c, c2)  # already at bracket width
            else:
                a, b = _bisect_zero(eq, c, qv, c2, q2, cfg)
            brackets.append((a, b))
            zeros.append(0.5 * (a + b))
    esc = [c for c, qv in zip(cs, qs) if qv is None]
    return ScanResult(zeros=zeros, brackets=brackets, escape_boundaries=edges, escaped=esc)
