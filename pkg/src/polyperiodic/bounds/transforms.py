"""Scalings that move an equation into the normalized setting of the checkers."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from ..coefficients import CoeffFn, Equation, certified_sign
from ..errors import NonpositiveK, VanishingLeading

FIT_HARMONICS = 32
FIT_MAX_DEGREE = 6
FIT_SAMPLES = 2048


def normalize(eq: Equation, K: float) -> Equation:
    """Rescale ``z -> K**(-1/n) z`` and ``t -> K**((n-1)/n) t``.

    ``P~_i(s) = P_i(s K**(-(n-1)/n)) / K**((n-i)/n)`` on the horizon
    ``omega K**((n-1)/n)``.  A periodic solution through ``c`` maps to one
    through ``K**(-1/n) c``.  The transformation is exact in the coefficient
    class: harmonics keep their coefficients, polynomial parts rescale.
    """
    if not K > 0:
        raise NonpositiveK(f"K must be positive, got {K!r}")
    n = eq.n
    kappa = K ** (-(n - 1) / n)
    coeffs = [f.time_scaled(kappa).scaled(K ** (-(n - i) / n)) for i, f in enumerate(eq.coeffs)]
    lead = None if eq.leading is None else eq.leading.time_scaled(kappa)
    return Equation(n, eq.omega / kappa, tuple(coeffs), lead, eq.check_leading)


def _antiderivative(f: CoeffFn) -> CoeffFn:
    poly = (0.0,) + tuple(c / (j + 1) for j, c in enumerate(f.poly))
    base = 2 * math.pi / f.omega
    harm = tuple((k, -b / (base * k), a / (base * k)) for k, a, b in f.harmonics)
    # shift so the antiderivative vanishes at t = 0
    c0 = sum(-b / (base * k) for k, a, b in f.harmonics)
    poly = (poly[0] - c0,) + poly[1:]
    return CoeffFn(poly, harm, f.omega)


class Reduction(NamedTuple):
    equation: Equation
    residual: float  # max fit error over the transformed coefficients; 0 when exact
    exact: bool
    reflected: bool  # True when z -> -z was applied (negative leading, even n)


def reduce_leading_report(eq: Equation) -> Reduction:
    """Remove a non-vanishing leading coefficient by the time change ``tau = int |Pn|``.

    Constant ``Pn`` is handled exactly.  Otherwise ``P_i / |Pn|`` composed with
    the inverse time change is refit by least squares onto polynomials of
    degree at most 6 plus 32 harmonics of the new horizon.  A negative leading
    coefficient becomes ``-1``; for even ``n`` the reflection ``z -> -z``
    restores ``+1`` (solutions through ``c`` then map to ``-c``).
    """
    if eq.leading is None:
        return Reduction(eq, 0.0, True, False)
    sign = certified_sign(eq.leading)
    if sign == 0:
        raise VanishingLeading("leading coefficient is not certified non-vanishing")
    n = eq.n
    lead = eq.leading.scaled(float(sign))  # |Pn|
    if lead.is_constant:
        p = float(lead(0.0))
        coeffs = [f.time_scaled(1.0 / p).scaled(1.0 / p) for f in eq.coeffs]
        omega = p * eq.omega
        residual, exact = 0.0, True
    else:
        coeffs, omega, residual = _refit(eq, lead)
        exact = False
    lead_new = None if sign > 0 else CoeffFn.constant(-1.0, omega)
    reflected = False
    if sign < 0 and n % 2 == 0:
        coeffs = [f.scaled((-1.0) ** (i + 1)) for i, f in enumerate(coeffs)]
        lead_new, reflected = None, True
    return Reduction(Equation(n, omega, tuple(coeffs), lead_new), residual, exact, reflected)


def reduce_leading(eq: Equation) -> Equation:
    return reduce_leading_report(eq).equation


def _refit(eq: Equation, lead: CoeffFn) -> tuple[list[CoeffFn], float, float]:
    tau_of = _antiderivative(lead)
    omega_new = float(tau_of(eq.omega))
    # fit nodes in tau, mapped back to t by Newton on tau(t) = tau_j
    M = FIT_SAMPLES
    tau = (np.arange(M) + 0.5) / M * omega_new
    tau_chk = np.arange(M) / M * omega_new + 0.25 * omega_new / M
    deg = min(max(max(f.degree for f in eq.coeffs), 0), FIT_MAX_DEGREE)

    def invert(taus):
        t = taus / omega_new * eq.omega
        for _ in range(60):
            step = (np.asarray(tau_of(t)) - taus) / np.asarray(lead(t))
            t = np.clip(t - step, 0.0, eq.omega)
            if np.max(np.abs(step)) < 1e-15 * eq.omega:
                break
        return t

    def design(taus):
        x = taus / omega_new
        cols = [x**j for j in range(deg + 1)]
        for k in range(1, FIT_HARMONICS + 1):
            cols += [np.cos(2 * np.pi * k * x), np.sin(2 * np.pi * k * x)]
        return np.column_stack(cols)

    A, A_chk = design(tau), design(tau_chk)
    t_fit, t_chk = invert(tau), invert(tau_chk)
    out, worst = [], 0.0
    for f in eq.coeffs:
        y = np.asarray(f(t_fit)) / np.asarray(lead(t_fit)) * np.ones(M)
        sol, *_ = np.linalg.lstsq(A, y, rcond=None)
        y_chk = np.asarray(f(t_chk)) / np.asarray(lead(t_chk)) * np.ones(M)
        worst = max(worst, float(np.max(np.abs(A_chk @ sol - y_chk))))
        poly = tuple(float(sol[j]) / omega_new**j for j in range(deg + 1))
        harm = tuple((k, float(sol[deg + 2 * k - 1]), float(sol[deg + 2 * k]))
                     for k in range(1, FIT_HARMONICS + 1))
        harm = tuple(h for h in harm if h[1] != 0.0 or h[2] != 0.0)
        out.append(CoeffFn(poly, harm, omega_new))
    return out, omega_new, worst
