"""Integration of the complex equation with blow-up detection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import _kernels as K
from .bounds.geometry import geometry
from .coefficients import Equation
from .errors import InsideDisk, InvalidInput, StepLimitExceeded

RADIUS_FLOOR = 1e3
# an initial value is never flagged as escaped before it has grown by this factor
RADIUS_GROWTH = 10.0


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    escape_radius: float | None = None  # None: 10 * rho, at least 1e3
    max_steps: int = 200_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InvalidInput("tolerances must be positive")
        if self.escape_radius is not None and not self.escape_radius > 1:
            raise InvalidInput("escape_radius must exceed 1")
        if self.max_steps < 1:
            raise InvalidInput("max_steps must be positive")

    def radius_for(self, eq: Equation) -> float:
        if self.escape_radius is not None:
            return float(self.escape_radius)
        return max(RADIUS_FLOOR, 10.0 * geometry(eq).rho)


DEFAULT_CONFIG = IntegratorConfig()


@dataclass(frozen=True)
class FlowOutcome:
    kind: Literal["completed", "escaped"]
    final: complex | None = None
    variation: complex | None = None
    escape_time: float | None = None
    arm: int | None = None
    offset: complex | None = None  # z(t1) - c, computed without cancellation
    z_cross: complex | None = None
    steps: int = 0
    zmax: float = 0.0

    @property
    def completed(self) -> bool:
        return self.kind == "completed"


def _leading_abs(eq: Equation, t: float) -> float:
    return 1.0 if eq.leading is None else abs(float(eq.leading(t)))


def integrate(eq: Equation, c: complex, t0: float, t1: float,
              cfg: IntegratorConfig = DEFAULT_CONFIG, with_variation: bool = False) -> FlowOutcome:
    """Solve ``z' = f(z, t)``, ``z(t0) = c`` up to ``t1`` (either direction).

    Crossing the escape radius ends the run; the blow-up time is extrapolated
    from the crossing with the dominant balance ``z' ~ Pn z**n``.
    """
    c = complex(c)
    if t0 == t1:
        return FlowOutcome("completed", final=c, variation=1.0 + 0j if with_variation else None,
                           offset=0j, zmax=abs(c))
    pk = eq.packed
    mode = K.MODE_VAR if with_variation else K.MODE_PLAIN
    y0 = np.zeros(2 if with_variation else 1, dtype=np.complex128)
    if with_variation:
        y0[1] = 1.0
    radius = max(cfg.radius_for(eq), RADIUS_GROWTH * abs(c))
    status, s_end, y, steps, zmax, zc = K.integrate(
        mode, c, float(t0), float(t1), y0, cfg.rel_tol, cfg.abs_tol, radius, cfg.max_steps,
        pk.n, pk.omega, pk.poly, pk.hk, pk.ha, pk.hb)
    sgn = 1.0 if t1 >= t0 else -1.0
    if status == K.COMPLETED:
        return FlowOutcome("completed", final=c + complex(y[0]),
                           variation=complex(y[1]) if with_variation else None,
                           offset=complex(y[0]), steps=int(steps), zmax=float(zmax))
    if status == K.ESCAPED:
        t_cross = t0 + sgn * s_end
        lead = _leading_abs(eq, t_cross)
        zc = complex(zc)
        tail = 1.0 / ((eq.n - 1) * max(lead, 1e-300) * abs(zc) ** (eq.n - 1))
        t_star = t_cross + sgn * tail
        t_star = min(t_star, t1) if sgn > 0 else max(t_star, t1)
        return FlowOutcome("escaped", escape_time=float(t_star), arm=_arm_or_none(eq, zc),
                           z_cross=zc, steps=int(steps), zmax=float(zmax))
    raise StepLimitExceeded(
        f"integration stalled at t={t0 + sgn * s_end:.17g} after {steps} steps "
        f"({'step limit' if status == K.STEP_LIMIT else 'step size underflow'})")


def _arm_or_none(eq: Equation, z: complex) -> int | None:
    try:
        return classify_escape(eq, z)
    except InsideDisk:
        return None


def classify_escape(eq: Equation, z: complex) -> int | None:
    """Index ``k`` of the arm ``G_k`` containing ``z``; ``None`` inside a sector ``H_k``."""
    geo = geometry(eq)
    if abs(z) <= geo.rho:
        raise InsideDisk(f"|z| = {abs(z):.6g} does not exceed rho = {geo.rho:.6g}")
    return geo.arm_of(complex(z))


def blowup_time_monomial(n: int, c: float) -> float:
    """Closed-form blow-up time of ``z' = z**n`` from real ``c > 0``."""
    return 1.0 / ((n - 1) * c ** (n - 1))
