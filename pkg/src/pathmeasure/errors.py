"""Exception hierarchy shared by all subpackages."""


class PathMeasureError(Exception):
    """Base class for library errors."""


class DomainError(PathMeasureError, ValueError):
    """An argument lies outside the domain of an operation."""


class NumericalError(PathMeasureError, RuntimeError):
    """A numerical procedure could not produce a trustworthy result."""


class IntegrationError(NumericalError):
    """Trajectory integration failed, e.g. a pair approached a singularity."""


class ShootingError(NumericalError):
    """Boundary-value root search failed on every bracket it found."""


class CausticError(NumericalError):
    """Endpoint sits on (or too close to) a caustic; Van Vleck factor diverges."""


class OrbitingError(NumericalError):
    """Scattering orbit stayed trapped beyond the integration horizon."""


class SingularAngleError(NumericalError):
    """Cross-section requested inside a rainbow, glory or forward guard band.

    ``kind`` is one of ``"glory"``, ``"rainbow"`` or ``"forward"``.
    """

    def __init__(self, message, kind=None):
        super().__init__(message)
        self.kind = kind


class ConvergenceError(NumericalError):
    """An iterative solver failed to converge."""


class ModelError(PathMeasureError, ValueError):
    """A user-supplied model violates its contract."""
