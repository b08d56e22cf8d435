"""Exception hierarchy shared by all modules.

ParameterError / ConfigError map to CLI exit code 1,
NumericError / ResourceError to exit code 2.
"""


class PercolabError(Exception):
    pass


class ParameterError(PercolabError, ValueError):
    """A parameter is outside its documented range."""


class ConfigError(PercolabError, ValueError):
    """Inconsistent configuration (geometry mismatch, unknown keys, ...)."""


class NumericError(PercolabError, ArithmeticError):
    """Quadrature or extrapolation failed to converge; carries diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ResourceError(PercolabError, RuntimeError):
    """Projected memory/vertex budget exceeded; raised before sampling."""
