"""Phase-portrait constants: arm width ``a``, disk radius ``rho``, arms and sectors.

For ``z = r e^{i theta}`` with ``r > rho`` the exterior splits into arms
``G_k`` (``|theta - k pi/(n-1)| < a/r``) and the sectors ``H_k`` between
them, ``k = 0 .. 2n-3``.  Forward escapes leave through even arms, backward
escapes through odd ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..coefficients import Equation, equation_norm

RHO_PAD = 1e-6


@dataclass(frozen=True)
class Geometry:
    a: float
    rho: float
    n: int

    @property
    def arms(self) -> int:
        return 2 * self.n - 2

    def axis(self, k: int) -> float:
        return k * math.pi / (self.n - 1)

    def _polar(self, z: complex) -> tuple[float, float]:
        r = abs(z)
        theta = math.atan2(z.imag, z.real) % (2 * math.pi)
        return r, theta

    def in_G(self, z: complex, k: int) -> bool:
        r, theta = self._polar(complex(z))
        if r <= self.rho:
            return False
        d = abs(theta - self.axis(k))
        d = min(d, 2 * math.pi - d)
        return d < self.a / r

    def in_H(self, z: complex, k: int) -> bool:
        r, theta = self._polar(complex(z))
        if r <= self.rho:
            return False
        lo = self.axis(k) + self.a / r
        hi = self.axis(k + 1) - self.a / r
        return lo <= theta <= hi

    def arm_of(self, z: complex) -> int | None:
        for k in range(self.arms):
            if self.in_G(z, k):
                return k
        return None


def arm_width(eq: Equation) -> float:
    return max(6.0, 6.0 * equation_norm(eq))


def geometry(eq: Equation) -> Geometry:
    """``a = max(6, 6||P||)`` and ``rho`` just above ``a (n-1)(n-2) / pi``.

    Defined for every ``n >= 2``; for ``n = 2`` the lower bound on ``rho``
    degenerates to zero.
    """
    a = arm_width(eq)
    rho = (1.0 + RHO_PAD) * a * (eq.n - 1) * (eq.n - 2) / math.pi
    return Geometry(a=a, rho=rho, n=eq.n)
