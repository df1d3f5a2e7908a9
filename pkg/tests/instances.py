"""Random equation generators shared by the property and acceptance suites."""

import math

import numpy as np

from polyperiodic.bounds import check_theorem_1_1
from polyperiodic.coefficients import CoeffFn, Equation


def _coeff(rng, bound, omega, harmonics=True):
    """Constant plus (optionally) one harmonic, certified sup norm at most ``bound``."""
    w = rng.dirichlet([1.0, 1.0, 1.0]) * bound * rng.uniform(0.2, 1.0)
    sign = rng.choice([-1.0, 1.0], 3)
    if not harmonics:
        return CoeffFn.constant(float(sign[0] * w[0]), omega)
    k = int(rng.integers(1, 3))
    return CoeffFn((float(sign[0] * w[0]),), ((k, float(sign[1] * w[1]), float(sign[2] * w[2])),), omega)


def theorem_1_1_instance(rng, n, omega, harmonics=True):
    """A random equation passing the Theorem 1.1 checker at some K in [1, 3].

    ``P_{n-1}`` is kept within the middle cap as well, so every coefficient
    other than ``P_0`` and ``P_1`` is small.
    """
    s = math.sin(math.pi / (n - 2))
    while True:
        K = float(rng.uniform(1.0, 3.0))
        p0 = float(rng.uniform(0.05, 0.6)) * K
        coeffs = [_coeff(rng, p0, omega, harmonics)]
        thresh = (K + p0 + (K - p0) * s) / K ** (1 / n)
        mag = thresh * float(rng.uniform(1.05, 1.6))
        coeffs.append(CoeffFn.constant(float(rng.choice([-1.0, 1.0])) * mag, omega))
        for i in range(2, n):
            cap = (K - p0) * s / ((n - 3) * K ** (i / n))
            coeffs.append(_coeff(rng, 0.9 * cap, omega, harmonics))
        eq = Equation(n, omega, tuple(coeffs))
        if check_theorem_1_1(eq, K).verdict:
            return eq, K


def small_instance(rng, n, omega, amp=1.0):
    """Random trig-polynomial coefficients with sup norms at most ``amp``."""
    return Equation(n, omega, tuple(_coeff(rng, amp, omega) for _ in range(n)))


def rng_for(seed):
    return np.random.default_rng(seed)
