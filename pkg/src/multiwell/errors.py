"""Shared exception types.

The CLI maps these onto process exit codes, so modules should raise the
most specific type that applies instead of bare ValueError/RuntimeError.
"""


class ConfigError(ValueError):
    """Invalid configuration, parameters, or input schema (exit code 2)."""


class DomainError(ConfigError):
    """A spatial point lies outside the closure of the domain box."""


class NoBitangentError(ConfigError):
    """No common tangent line exists on the requested bracket."""


class NumericError(RuntimeError):
    """Non-finite values or a numerically inconsistent intermediate state (exit code 3)."""


class StalledError(NumericError):
    """Descent step size underflowed before reaching the stopping test."""


class GeometryError(ConfigError):
    """A construction does not fit inside the domain."""


class InfeasibleError(ValueError):
    """A constraint cannot be satisfied by the requested ansatz (exit code 4)."""
