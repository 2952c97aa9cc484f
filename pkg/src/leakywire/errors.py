"""Exception hierarchy.  ``exit_code`` follows the CLI contract."""


class LeakyWireError(Exception):
    exit_code = 1


class ConfigError(LeakyWireError):
    exit_code = 1


class DomainError(LeakyWireError, ValueError):
    """Argument outside the domain of a function."""


class UndefinedPairError(LeakyWireError, ValueError):
    """Chord ratio requested for coinciding arc-length parameters."""


class DegenerateParametrizationError(LeakyWireError, ValueError):
    """Curve speed vanishes on a set of positive measure."""


class AssumptionViolation(LeakyWireError):
    """The curve fails a geometric admissibility check."""

    exit_code = 2

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class GeometryError(LeakyWireError):
    """Curvilinear coordinates are not unique (strip too wide for the curve)."""

    exit_code = 2


class MeshError(LeakyWireError, ValueError):
    pass


class GridMismatchError(LeakyWireError, ValueError):
    pass


class ConvergenceError(LeakyWireError):
    """A numerical iteration did not reach its tolerance."""

    exit_code = 3

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
