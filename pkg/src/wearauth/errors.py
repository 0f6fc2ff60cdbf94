"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class WearAuthError(Exception):
    exit_code = 1


class ConfigError(WearAuthError, ValueError):
    exit_code = 2


class DataError(WearAuthError, ValueError):
    exit_code = 3


class ConvergenceError(WearAuthError, RuntimeError):
    exit_code = 4

    def __init__(self, message, violation=float("nan")):
        super().__init__(message)
        self.violation = violation
