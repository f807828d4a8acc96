"""
Exception types raised by the pipeline.

Invalid input derives from ``ValueError``; failures of the computation itself derive from
``RuntimeError``. The CLI maps each family onto an exit code.
"""


class ParseError(ValueError):
    """Malformed phase expression. ``position`` is the 0-based offset of the offending token."""

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class DegreeLimitError(ValueError):
    pass


class PreconditionError(ValueError):
    """An operation was called on an input outside its domain."""


class PipelineError(RuntimeError):
    """Internal consistency failure; should not happen on valid input."""


class IrrationalRootError(PipelineError):
    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class AdaptationLimitError(PipelineError):
    def __init__(self, message, step_log):
        super().__init__(message)
        self.step_log = step_log


class QuadratureBudgetError(RuntimeError):
    def __init__(self, message, nodes, budget):
        super().__init__(message)
        self.nodes = nodes
        self.budget = budget


class FitInconclusiveError(RuntimeError):
    def __init__(self, message, fit=None):
        super().__init__(message)
        self.fit = fit
