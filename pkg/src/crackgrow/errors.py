"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: parse failures exit 2, numeric
aborts exit 3, configuration problems exit 4.
"""


class CrackGrowError(Exception):
    """Base class for all package errors."""


class DomainError(CrackGrowError, ValueError):
    """A numeric argument violates an operation's domain (e.g. log of <= 0)."""


class DegenerateDataError(DomainError):
    """Input data has zero range or zero variance where spread is required."""


class ConfigError(CrackGrowError, ValueError):
    """A configuration value is invalid or internally inconsistent."""


class ParseError(CrackGrowError, ValueError):
    """An input file could not be parsed; message names file and line."""


class RunoutError(CrackGrowError):
    """No crack-growth region was found: the series looks linear to the end."""


class TrainingAbortError(CrackGrowError, RuntimeError):
    """Training hit a non-finite loss or gradient; message names term and epoch."""
