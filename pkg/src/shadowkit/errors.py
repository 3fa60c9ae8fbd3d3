"""Exception types shared across the package.

The CLI maps each class to a process exit code.
"""


class ShadowkitError(Exception):
    exit_code = 1


class InvalidInputError(ShadowkitError, ValueError):
    exit_code = 2


class InfeasibleError(ShadowkitError):
    """A requested construction cannot be realized at the given parameters."""

    exit_code = 3

    def __init__(self, message, diagnosis=None):
        super().__init__(message)
        self.diagnosis = diagnosis or {}


class CapExceededError(ShadowkitError):
    """A materialization or work budget would be exceeded."""

    exit_code = 4
