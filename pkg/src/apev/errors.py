"""Exception hierarchy shared across the package.

Every error raised on a documented failure path derives from ApevError so
the CLI can map it onto a stable exit code.
"""

__all__ = [
    "ApevError",
    "ConfigError",
    "WindowError",
    "ContractionError",
    "ConvergenceError",
    "BallExitError",
]


class ApevError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(ApevError):
    """Invalid configuration document or parameter set.

    The message is path-qualified, e.g. ``solver.dt: must be positive``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class WindowError(ApevError):
    """Evaluation or search outside the admissible time window."""


class ContractionError(ApevError):
    """The contraction precondition of the fixed-point solver is violated."""


class ConvergenceError(ApevError):
    """Iteration budget exhausted before the stopping tolerance was met."""


class BallExitError(ApevError):
    """A Picard iterate left the invariant ball."""
