"""Exception hierarchy.

Validation problems (bad inputs, violated preconditions) derive from
:class:`ValidationError`; failures that happen while simulating or fitting
derive from :class:`RuntimeFailure`. The CLI maps the two families onto
exit codes 1 and 2.
"""


class PhononLaserError(Exception):
    pass


class ValidationError(PhononLaserError, ValueError):
    """An input or precondition is out of bounds."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class CalibrationUnderdetermined(ValidationError):
    pass


class StabilityError(ValidationError):
    """Step size exceeds the admissible bound."""

    def __init__(self, message, max_dt):
        super().__init__(message, key="dt")
        self.max_dt = max_dt


class InvalidContextError(ValidationError):
    pass


class RuntimeFailure(PhononLaserError, RuntimeError):
    pass


class NonFiniteStateError(RuntimeFailure):
    def __init__(self, message, step_index):
        super().__init__(message)
        self.step_index = step_index


class FitUnreliableError(RuntimeFailure):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NoPeakError(RuntimeFailure):
    pass


class ConvergenceError(RuntimeFailure):
    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class KneeNotFoundError(RuntimeFailure):
    pass


class InsufficientSamplesError(RuntimeFailure):
    pass
