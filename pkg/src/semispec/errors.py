"""Exception taxonomy; each class carries the CLI exit code for its category."""


class SemispecError(Exception):
    exit_code = 1


class ConfigError(SemispecError, ValueError):
    exit_code = 2


class ConvergenceError(SemispecError, RuntimeError):
    """Numerical refinement or eigenvalue convergence failed."""

    exit_code = 3


class HypothesisViolation(SemispecError, ValueError):
    """Input violates a structural assumption (well shape, asymmetry, ...)."""

    exit_code = 4


class ConsistencyError(SemispecError, AssertionError):
    """Two independent routes to the same quantity disagree."""

    exit_code = 5
