"""Exception hierarchy for the lab.

Errors that a pipeline reports instead of raising keep the same class; the
pipeline stores ``type(err).__name__`` plus the message as a reason string.
"""


class LabError(Exception):
    """Base class for every error raised by this package."""


class DomainError(LabError, ValueError):
    pass


class ConfigError(LabError, ValueError):
    pass


class DegenerateInterval(LabError, ValueError):
    pass


class NotNested(LabError, ValueError):
    pass


class NotMonotoneOnCore(LabError, ValueError):
    pass


class CriticalOnOrbit(LabError):
    def __init__(self, step):
        super().__init__(f"orbit hits the critical point at step {step}")
        self.step = step


class NoFixedPoint(LabError):
    pass


class NoReturn(LabError):
    def __init__(self, horizon):
        super().__init__(f"critical orbit does not enter the window within {horizon} steps")
        self.horizon = horizon


class NoPeriodicPoint(LabError):
    pass


class RenormalizationSuspected(LabError):
    pass


class PreconditionNotMet(LabError):
    pass


class PeriodicAttractorSuspected(LabError):
    def __init__(self, period, multiplier):
        super().__init__(
            f"critical orbit converges to a period-{period} orbit with |multiplier| = {multiplier:.3g}"
        )
        self.period = period
        self.multiplier = multiplier


class EmptyTable(LabError, ValueError):
    pass


class IoError(LabError, OSError):
    pass
