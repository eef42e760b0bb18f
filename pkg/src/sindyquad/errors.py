"""Exception and warning hierarchy.

Every error carries an exit code so the command line front end can map
failures to distinct process statuses without string matching.
"""


class SindyQuadError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(SindyQuadError):
    """Invalid configuration, unknown keys or bad parameter values."""

    exit_code = 2


class DataError(SindyQuadError):
    """Malformed snapshot data (CSV layout, timestamps, shapes)."""

    exit_code = 3


class NumericalError(SindyQuadError):
    """A numerical procedure produced non-finite or singular results."""

    exit_code = 4


class DivergenceError(NumericalError):
    """A closed-loop rollout left the admissible state box."""

    def __init__(self, step, message=None):
        self.step = int(step)
        super().__init__(message or f"state diverged at step {self.step}")


class GimbalLockError(NumericalError):
    """The Euler-rate map is singular at the requested attitude."""


class SingularMixingError(NumericalError):
    """The motor mixing matrix cannot be inverted."""


class SweepFailure(NumericalError):
    """Every point of a lambda sweep failed."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        lines = [f"  lambda={lam:g}: {msg}" for lam, msg in self.diagnostics]
        super().__init__("all sweep points failed:\n" + "\n".join(lines))


class EmptyModelWarning(UserWarning):
    """A regression thresholded every coefficient of a state to zero."""


class DenseModelWarning(UserWarning):
    """A regression kept (almost) every library term."""


class RankDeficiencyWarning(UserWarning):
    """The library matrix is poorly conditioned on the data."""


class ConvergenceWarning(UserWarning):
    """An iterative solver stopped at its iteration limit."""


class UnderdeterminedWarning(UserWarning):
    """Fewer snapshots than library columns."""
