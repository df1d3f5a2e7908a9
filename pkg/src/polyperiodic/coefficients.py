"""Coefficient functions P_i(t) and the equation data model.

A coefficient is an algebraic polynomial in ``t`` plus a trigonometric
polynomial with base frequency ``2*pi/omega``::

    f(t) = sum_j c_j t**j + sum_k (a_k cos(2 pi k t / omega) + b_k sin(2 pi k t / omega))

The class is closed under the time rescalings used for normalization and
admits a cheap rigorous bound on ``max |f|`` over ``[0, omega]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidInput, VanishingLeading

SAMPLES = 4096


class SupNorm(NamedTuple):
    certified_upper: float
    sampled_max: float


def _clean_harmonics(harmonics) -> tuple[tuple[int, float, float], ...]:
    out = []
    seen = set()
    for entry in harmonics:
        if len(entry) != 3:
            raise InvalidInput(f"harmonic entry {entry!r} must be [k, a, b]")
        k, a, b = entry
        if isinstance(k, float):
            if not k.is_integer():
                raise InvalidInput(f"harmonic index {k!r} is not an integer")
            k = int(k)
        if not isinstance(k, (int, np.integer)) or k < 1:
            raise InvalidInput(f"harmonic index {k!r} must be a positive integer")
        if int(k) in seen:
            raise InvalidInput(f"duplicate harmonic index {k}")
        seen.add(int(k))
        out.append((int(k), float(a), float(b)))
    out.sort()
    return tuple(out)


@dataclass(frozen=True)
class CoeffFn:
    """Real coefficient function on ``[0, omega]``."""

    poly: tuple[float, ...] = ()
    harmonics: tuple[tuple[int, float, float], ...] = ()
    omega: float = 2 * math.pi

    def __post_init__(self):
        object.__setattr__(self, "poly", tuple(float(c) for c in self.poly))
        object.__setattr__(self, "harmonics", _clean_harmonics(self.harmonics))
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise InvalidInput(f"omega must be positive and finite, got {self.omega!r}")
        if not all(math.isfinite(c) for c in self.poly):
            raise InvalidInput("poly coefficients must be finite")
        if not all(math.isfinite(a) and math.isfinite(b) for _, a, b in self.harmonics):
            raise InvalidInput("harmonic amplitudes must be finite")

    @classmethod
    def constant(cls, value: float, omega: float) -> "CoeffFn":
        return cls(poly=(float(value),) if value != 0 else (), omega=omega)

    @classmethod
    def zero(cls, omega: float) -> "CoeffFn":
        return cls(omega=omega)

    # -- evaluation ----------------------------------------------------------

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c in reversed(self.poly):
            out = out * t + c
        base = 2 * math.pi / self.omega
        for k, a, b in self.harmonics:
            out = out + a * np.cos(base * k * t) + b * np.sin(base * k * t)
        return out if out.ndim else float(out)

    @property
    def is_zero(self) -> bool:
        return not any(self.poly) and not any(a or b for _, a, b in self.harmonics)

    @property
    def is_constant(self) -> bool:
        return not any(self.poly[1:]) and not any(a or b for _, a, b in self.harmonics)

    @property
    def degree(self) -> int:
        """Degree of the algebraic part (-1 when it is empty)."""
        d = len(self.poly) - 1
        while d >= 0 and self.poly[d] == 0:
            d -= 1
        return d

    def derivative(self) -> "CoeffFn":
        poly = tuple(j * c for j, c in enumerate(self.poly))[1:]
        base = 2 * math.pi / self.omega
        harm = tuple((k, b * base * k, -a * base * k) for k, a, b in self.harmonics)
        return CoeffFn(poly, harm, self.omega)

    def certified_bound(self) -> float:
        """Coefficient-sum upper bound of ``max |f|`` on ``[0, omega]``."""
        r = max(1.0, self.omega)
        return (sum(abs(c) * r**j for j, c in enumerate(self.poly))
                + sum(abs(a) + abs(b) for _, a, b in self.harmonics))

    def lipschitz(self) -> float:
        return self.derivative().certified_bound()

    def grid(self, m: int = SAMPLES) -> tuple[np.ndarray, np.ndarray]:
        t = np.linspace(0.0, self.omega, m)
        return t, np.asarray(self(t), dtype=float) * np.ones_like(t)

    # -- algebra -------------------------------------------------------------

    def scaled(self, s: float) -> "CoeffFn":
        return CoeffFn(tuple(s * c for c in self.poly),
                       tuple((k, s * a, s * b) for k, a, b in self.harmonics), self.omega)

    def __add__(self, other: "CoeffFn") -> "CoeffFn":
        if not math.isclose(self.omega, other.omega, rel_tol=1e-12):
            raise InvalidInput("cannot add coefficients with different omega")
        m = max(len(self.poly), len(other.poly))
        p = [0.0] * m
        for j, c in enumerate(self.poly):
            p[j] += c
        for j, c in enumerate(other.poly):
            p[j] += c
        h: dict[int, list[float]] = {}
        for k, a, b in self.harmonics + other.harmonics:
            acc = h.setdefault(k, [0.0, 0.0])
            acc[0] += a
            acc[1] += b
        return CoeffFn(tuple(p), tuple((k, a, b) for k, (a, b) in h.items()), self.omega)

    def time_scaled(self, kappa: float) -> "CoeffFn":
        """Return ``s -> f(kappa * s)`` on the horizon ``omega / kappa``."""
        poly = tuple(c * kappa**j for j, c in enumerate(self.poly))
        return CoeffFn(poly, self.harmonics, self.omega / kappa)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {"poly": list(self.poly), "harmonics": [[k, a, b] for k, a, b in self.harmonics]}

    @classmethod
    def from_dict(cls, data: Any, omega: float, where: str = "coeff") -> "CoeffFn":
        if not isinstance(data, dict):
            raise InvalidInput(f"{where}: expected an object with 'poly' and 'harmonics'")
        unknown = set(data) - {"poly", "harmonics"}
        if unknown:
            raise InvalidInput(f"{where}: unknown field(s) {sorted(unknown)}")
        poly = data.get("poly", [])
        harm = data.get("harmonics", [])
        if not isinstance(poly, list) or not all(isinstance(c, (int, float)) for c in poly):
            raise InvalidInput(f"{where}.poly: expected a list of numbers")
        if not isinstance(harm, list) or not all(isinstance(h, list) for h in harm):
            raise InvalidInput(f"{where}.harmonics: expected a list of [k, a, b] triples")
        try:
            _clean_harmonics(tuple(h) for h in harm)
        except (InvalidInput, TypeError) as exc:
            raise InvalidInput(f"{where}.harmonics: {exc}") from None
        try:
            return cls(tuple(poly), tuple(tuple(h) for h in harm), omega)
        except InvalidInput as exc:
            raise InvalidInput(f"{where}: {exc}") from None


def eval_coeff(f: CoeffFn, t: float) -> float:
    return f(t)


def sup_norm(f: CoeffFn, samples: int = SAMPLES) -> SupNorm:
    """Rigorous upper bound and a tight sampled estimate of ``max |f|``."""
    certified = f.certified_bound()
    if f.is_constant:
        v = abs(f.poly[0]) if f.poly else 0.0
        return SupNorm(certified, v)
    t, v = f.grid(samples)
    absv = np.abs(v)
    i = int(np.argmax(absv))
    best = float(absv[i])
    lo, hi = t[max(i - 1, 0)], t[min(i + 1, len(t) - 1)]
    res = minimize_scalar(lambda s: -abs(f(s)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, f.omega)})
    best = max(best, -float(res.fun))
    return SupNorm(certified, min(best, certified))


def certified_sign(f: CoeffFn, samples: int = SAMPLES) -> int:
    """+1 / -1 when ``f`` provably keeps that sign on ``[0, omega]``, else 0."""
    if f.is_constant:
        c = f.poly[0] if f.poly else 0.0
        return int(np.sign(c))
    t, v = f.grid(samples)
    slack = f.lipschitz() * (t[1] - t[0]) / 2
    if v.min() - slack > 0:
        return 1
    if v.max() + slack < 0:
        return -1
    return 0


def certified_range(f: CoeffFn, samples: int = SAMPLES) -> tuple[float, float]:
    """Conservative ``(min |f|, max |f|)`` on ``[0, omega]``."""
    if f.is_constant:
        c = abs(f.poly[0]) if f.poly else 0.0
        return c, c
    t, v = f.grid(samples)
    slack = f.lipschitz() * (t[1] - t[0]) / 2
    a = np.abs(v)
    return max(float(a.min()) - slack, 0.0), min(float(a.max()) + slack, f.certified_bound())


@dataclass(frozen=True)
class Equation:
    """``z' = Pn(t) z**n + P_{n-1}(t) z**(n-1) + ... + P_0(t)`` on ``[0, omega]``.

    ``leading`` is ``Pn``; ``None`` means the monic equation.
    """

    n: int
    omega: float
    coeffs: tuple[CoeffFn, ...]
    leading: CoeffFn | None = None
    check_leading: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise InvalidInput(f"n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise InvalidInput(f"omega must be positive and finite, got {self.omega!r}")
        coeffs = tuple(self.coeffs)
        if len(coeffs) != self.n:
            raise InvalidInput(f"coeffs: expected {self.n} entries (P_0..P_{self.n - 1}), got {len(coeffs)}")
        for i, c in enumerate(coeffs):
            if not math.isclose(c.omega, self.omega, rel_tol=1e-12):
                raise InvalidInput(f"coeffs[{i}]: omega {c.omega} differs from equation omega {self.omega}")
        object.__setattr__(self, "coeffs", coeffs)
        if self.leading is not None:
            if not math.isclose(self.leading.omega, self.omega, rel_tol=1e-12):
                raise InvalidInput("leading: omega differs from equation omega")
            if self.check_leading and certified_sign(self.leading) == 0:
                raise VanishingLeading("leading coefficient is not certified non-vanishing on [0, omega]")

    # -- constructors ---------------------------------------------------------

    @classmethod
    def from_constants(cls, n: int, omega: float, consts: Sequence[float],
                       leading: float | None = None) -> "Equation":
        """Constant coefficients ``consts = (P_0, ..., P_{n-1})``."""
        return cls(n, omega, tuple(CoeffFn.constant(c, omega) for c in consts),
                   None if leading is None else CoeffFn.constant(leading, omega))

    @classmethod
    def monomial(cls, n: int, omega: float) -> "Equation":
        """``z' = z**n``."""
        return cls.from_constants(n, omega, [0.0] * n)

    def replace(self, *, coeffs=None, leading=..., omega=None) -> "Equation":
        return Equation(self.n, self.omega if omega is None else omega,
                        self.coeffs if coeffs is None else tuple(coeffs),
                        self.leading if leading is ... else leading, self.check_leading)

    def with_omega(self, omega: float) -> "Equation":
        """Same coefficient data on a new horizon; harmonic base frequency follows ``omega``."""
        def move(f):
            return CoeffFn(f.poly, f.harmonics, omega)
        return Equation(self.n, omega, tuple(move(c) for c in self.coeffs),
                        None if self.leading is None else move(self.leading), self.check_leading)

    # -- evaluation -----------------------------------------------------------

    def rhs(self, z, t: float):
        """Right-hand side at a single time ``t`` (``z`` may be an array)."""
        lead = 1.0 if self.leading is None else self.leading(t)
        acc = lead
        for c in reversed(self.coeffs):
            acc = acc * z + c(t)
        return acc

    def frozen_polynomial(self, t: float) -> np.ndarray:
        """Coefficients of ``f(., t)`` in descending powers (for ``np.roots``)."""
        lead = 1.0 if self.leading is None else float(self.leading(t))
        return np.array([lead] + [float(c(t)) for c in reversed(self.coeffs)])

    @property
    def all_constant(self) -> bool:
        return all(c.is_constant for c in self.coeffs) and (
            self.leading is None or self.leading.is_constant)

    @cached_property
    def packed(self) -> "PackedEquation":
        return PackedEquation.build(self)

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "omega": self.omega,
            "coeffs": [c.to_dict() for c in self.coeffs],
            "leading": None if self.leading is None else self.leading.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Any) -> "Equation":
        if not isinstance(data, dict):
            raise InvalidInput("equation: expected a JSON object")
        unknown = set(data) - {"n", "omega", "coeffs", "leading"}
        if unknown:
            raise InvalidInput(f"equation: unknown field(s) {sorted(unknown)}")
        for key in ("n", "omega", "coeffs"):
            if key not in data:
                raise InvalidInput(f"equation: missing field '{key}'")
        n, omega = data["n"], data["omega"]
        if isinstance(n, bool) or not isinstance(n, int):
            raise InvalidInput(f"n: expected an integer, got {n!r}")
        if isinstance(omega, bool) or not isinstance(omega, (int, float)):
            raise InvalidInput(f"omega: expected a number, got {omega!r}")
        coeffs = data["coeffs"]
        if not isinstance(coeffs, list):
            raise InvalidInput("coeffs: expected a list")
        omega = float(omega)
        if not (omega > 0 and math.isfinite(omega)):
            raise InvalidInput(f"omega: must be positive, got {omega!r}")
        parsed = [CoeffFn.from_dict(c, omega, f"coeffs[{i}]") for i, c in enumerate(coeffs)]
        lead = data.get("leading")
        leading = None if lead is None else CoeffFn.from_dict(lead, omega, "leading")
        return cls(n, omega, tuple(parsed), leading)


def equation_norm(eq: Equation) -> float:
    """``||P||``: the largest certified sup norm over ``P_0 .. P_{n-1}``."""
    return max((c.certified_bound() for c in eq.coeffs), default=0.0)


@dataclass(frozen=True)
class PackedEquation:
    """Dense arrays consumed by the compiled integrators.

    Row ``i`` holds ``P_i`` for ``i < n`` and the leading coefficient in row ``n``.
    """

    n: int
    omega: float
    poly: np.ndarray
    hk: np.ndarray
    ha: np.ndarray
    hb: np.ndarray

    @classmethod
    def build(cls, eq: Equation) -> "PackedEquation":
        fns = list(eq.coeffs) + [eq.leading if eq.leading is not None
                                 else CoeffFn.constant(1.0, eq.omega)]
        d = max(1, max(len(f.poly) for f in fns))
        h = max(1, max(len(f.harmonics) for f in fns))
        poly = np.zeros((eq.n + 1, d))
        hk = np.zeros((eq.n + 1, h))
        ha = np.zeros((eq.n + 1, h))
        hb = np.zeros((eq.n + 1, h))
        for i, f in enumerate(fns):
            poly[i, :len(f.poly)] = f.poly
            for j, (k, a, b) in enumerate(f.harmonics):
                hk[i, j], ha[i, j], hb[i, j] = k, a, b
        return cls(eq.n, eq.omega, poly, hk, ha, hb)
