"""Exception types shared across the toolkit.

Each carries the CLI exit code it maps to.
"""


class QcloneError(Exception):
    exit_code = 1


class InputError(QcloneError, ValueError):
    """Malformed or out-of-domain input."""

    exit_code = 1


class DimensionError(InputError):
    pass


class InfeasibleError(QcloneError):
    exit_code = 2


class VerificationError(QcloneError):
    """A construction failed its own post-condition check."""

    exit_code = 3


class CapExceeded(QcloneError):
    """Requested size is above a configured enumeration or dense cap."""

    exit_code = 4
