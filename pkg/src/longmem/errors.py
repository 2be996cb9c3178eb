"""Exception types shared across the package."""


class LongMemError(Exception):
    """Base class for errors raised by :mod:`longmem`."""

    kind = "error"


class ValidationError(LongMemError, ValueError):
    """Invalid input: out-of-range parameter, malformed series, bad spec."""

    kind = "validation"


class DegenerateCovarianceError(LongMemError, ArithmeticError):
    """The local spectral level matrix G(d) is not positive definite.

    Usually means the bandwidth is below the dimension or that some
    coordinates are collinear (or identically zero).
    """

    kind = "degenerate"
