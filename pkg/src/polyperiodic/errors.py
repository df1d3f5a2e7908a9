"""Exception hierarchy shared by all modules."""


class PolyPeriodicError(Exception):
    """Base class for every error raised by the package."""


class InvalidInput(PolyPeriodicError, ValueError):
    """Malformed equation, system, or configuration data."""


class VanishingLeading(InvalidInput):
    """The leading coefficient cannot be certified non-vanishing."""


class StepLimitExceeded(PolyPeriodicError):
    """The integrator hit ``max_steps`` before reaching the end or escaping."""


class EscapedDomain(PolyPeriodicError):
    """The initial value does not complete on the horizon."""


class InsideDisk(PolyPeriodicError, ValueError):
    """Point lies inside the disk of radius rho; arms are undefined there."""


class EscapeOnContour(PolyPeriodicError):
    """A contour point leaves the domain or the contour crosses a blow-up cut."""


class ZeroOnContour(PolyPeriodicError):
    """The displacement vanishes (numerically) on the contour."""


class Diverged(PolyPeriodicError):
    """Newton iteration left its search region or escaped."""


class SingularDerivative(PolyPeriodicError):
    """Newton iteration met a (nearly) vanishing derivative."""


class NonpositiveK(InvalidInput):
    pass


class BadK(InvalidInput):
    """K does not exceed the certified maximum of |P0|."""


class BadC(InvalidInput):
    pass


class UnsupportedDegree(PolyPeriodicError, ValueError):
    """Degree outside the range a theorem's formulas are defined for."""


class IndefiniteLeading(PolyPeriodicError, ValueError):
    """R_{n-1} changes sign (or touches zero) on the unit circle."""
