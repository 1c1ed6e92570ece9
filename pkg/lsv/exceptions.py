"""
Exception hierarchy for the voltube engine.

Every error derives from VoltubeError and from the builtin it refines, so callers
can catch either. The management command maps families of errors to exit codes.
"""


class VoltubeError(Exception):
    """Base class for all engine errors."""


class ModelSpecError(VoltubeError, ValueError):
    """Invalid model specification or family parameters."""


class ThresholdError(VoltubeError, ValueError):
    """Target log-price below the threshold a theorem requires."""


class DomainError(VoltubeError, ValueError):
    """Argument outside the domain of a closed-form expression."""


class ConvergenceError(VoltubeError, RuntimeError):
    """Iterative solver failed; ``last_iterate`` holds the final state."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class SimulationError(VoltubeError, RuntimeError):
    """Non-finite coefficient output during path simulation."""

    def __init__(self, message, path=None, step=None, state=None):
        super().__init__(message)
        self.path = path
        self.step = step
        self.state = state


class EstimationError(VoltubeError, ValueError):
    """Estimator preconditions not met (empty batch, grid mismatch, too few points)."""


class OracleDomainError(VoltubeError, ValueError):
    """Transform argument outside the analyticity strip."""


class OracleConvergenceError(VoltubeError, RuntimeError):
    """Fourier quadrature did not reach its error target."""


class ArbitrageError(VoltubeError, ValueError):
    """Option price outside the no-arbitrage band."""


class NotComputableError(VoltubeError):
    """Constant depends on quantities that are not numerically available."""


class ConfigError(VoltubeError, ValueError):
    """Experiment configuration is invalid."""


class HypothesisViolationError(VoltubeError):
    """Model coefficients fail the regularity/growth audit; ``report`` holds details."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
