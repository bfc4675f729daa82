"""
Exceptions raised by workstats
"""


class WorkStatsError(Exception):
    pass


class InvalidInputError(WorkStatsError, ValueError):
    pass


class ResourceLimitError(WorkStatsError):
    pass


class DegenerateTrajectoryError(WorkStatsError):
    pass


class SingularModeError(WorkStatsError):
    def __init__(self, k: float, message: str):
        super().__init__(f"k = {k:.17g}: {message}")
        self.k = k


class DomainError(WorkStatsError):
    def __init__(self, k: float, message: str):
        super().__init__(f"k = {k:.17g}: {message}")
        self.k = k


class AccuracyError(WorkStatsError):
    def __init__(self, estimate: float, tolerance: float, what: str):
        super().__init__(f"{what}: error estimate {estimate:.3e} exceeds {tolerance:.3e}")
        self.estimate = estimate
        self.tolerance = tolerance


class ConfigError(WorkStatsError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
