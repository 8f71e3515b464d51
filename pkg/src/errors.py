# src/errors.py
"""
Exception hierarchy shared by every stage of the pipeline.

Everything raised on purpose derives from KafError so the CLI can turn it into
a machine-readable failure line.
"""


class KafError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(KafError, ValueError):
    pass


class ResourceLimitError(KafError):
    """A node, feature or matrix size cap would be exceeded."""


class ContractViolationError(KafError):
    pass


class NumericalBreakdownError(KafError, ArithmeticError):
    pass


class ConfigError(KafError):
    pass


class ExperimentAbortedError(KafError):
    """Too many trials failed for the aggregate to mean anything."""
