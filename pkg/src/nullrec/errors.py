"""Exception types shared across the package."""


class NullrecError(Exception):
    """Base class for errors raised by this package."""


class ParameterDomainError(NullrecError, ValueError):
    """Principal drift parameter outside the admissible open interval."""


class QuadratureError(NullrecError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested accuracy."""


class SimulationDivergedError(NullrecError, FloatingPointError):
    """A simulated state became non-finite; indicates a bug or invalid input."""


class DegenerateWindowError(NullrecError, ValueError):
    """Restriction window is empty or has empty interior."""


class DegenerateSampleError(NullrecError, ValueError):
    """A statistic is undefined on the given sample (constant, empty, nonpositive)."""
