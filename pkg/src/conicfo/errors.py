"""Exception types raised by the solvers.

Each class also derives from the closest builtin so callers that only
know about ``ValueError`` and friends keep working.
"""


class ConicError(Exception):
    """Base class for all package errors."""


class ParameterError(ConicError, ValueError):
    """An input parameter is outside its admissible range."""


class DimensionError(ParameterError):
    """Vector or matrix dimensions are inconsistent."""


class CapabilityError(ConicError, TypeError):
    """The objective does not offer the oracle a method needs
    (e.g. a gradient for a nonsmooth function)."""


class ConfigurationError(ConicError, ValueError):
    """Missing data needed by a check, e.g. an unknown optimal value."""


class NumericalError(ConicError, ArithmeticError):
    """Non-finite values or a failed root finder."""


class NonConvergenceError(ConicError, RuntimeError):
    """An adaptive scheme exhausted its safeguard budget."""


class DataIOError(ConicError, OSError):
    """Reading or writing a problem or results file failed."""
