"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class DiscrestError(Exception):
    exit_code = 1


class ParameterError(DiscrestError, ValueError):
    """Bad argument: wrong dimension, out-of-range parameter, malformed input."""

    exit_code = 2


class ConfigError(ParameterError):
    exit_code = 2


class UnsupportedSurfaceError(ParameterError):
    exit_code = 2


class GuardError(DiscrestError, ValueError):
    """A size guard refused the computation (it would blow up time or memory)."""

    exit_code = 3


class AliasingError(DiscrestError, ValueError):
    """A grid too coarse to integrate the requested trigonometric polynomial exactly."""

    exit_code = 4
