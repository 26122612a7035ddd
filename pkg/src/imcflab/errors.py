"""Exception types raised by imcflab."""


class ImcfLabError(Exception):
    """Base class for all library errors."""


class InvalidConfig(ImcfLabError, ValueError):
    """A metric, flow or run configuration violates its invariants.

    ``field`` names the offending configuration entry when known.
    """

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class DomainError(ImcfLabError, ValueError):
    """A point or region lies outside the admissible domain of a chart."""


class DegenerateSurface(ImcfLabError, ArithmeticError):
    """The induced metric of a surface is not positive definite."""


class NonPositiveMeanCurvature(ImcfLabError, ArithmeticError):
    """Mean curvature vanished or turned negative where 1/H is required."""


class NonStarShaped(ImcfLabError, ArithmeticError):
    """The surface normal is no longer transverse to the radial direction."""


class IncompleteTrace(ImcfLabError, ValueError):
    """An operation needs a trace whose run completed."""
