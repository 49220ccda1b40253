"""
Exception hierarchy for qmgeo.

Every error raised on purpose by the library derives from :class:`QMGeoError`
so the CLI can map it to an exit code in one place.
"""

from __future__ import annotations

from typing import Optional

from .constants import EXIT_CONFIG_ERROR, EXIT_DATA_ERROR, EXIT_NUMERICAL_ERROR


class QMGeoError(Exception):
    """Base class for all qmgeo errors."""

    exit_code: int = 1


class ConfigError(QMGeoError, ValueError):
    """Invalid parameter or configuration document.

    ``key_path`` is the dotted path of the offending key (``"quantizer.p"``)
    when the error comes from a config document.
    """

    exit_code = EXIT_CONFIG_ERROR

    def __init__(self, message: str, key_path: Optional[str] = None):
        self.key_path = key_path
        if key_path:
            message = f"{key_path}: {message}"
        super().__init__(message)


class DomainError(QMGeoError, ValueError):
    """Input outside the domain of a mechanism or closed-form bound."""

    exit_code = EXIT_CONFIG_ERROR


class DataError(QMGeoError):
    """Malformed input data (CSV rows, columns, schema versions, shapes)."""

    exit_code = EXIT_DATA_ERROR

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class NumericalError(QMGeoError, ArithmeticError):
    """Iterative routine failed to converge or a quantity left the representable range."""

    exit_code = EXIT_NUMERICAL_ERROR

    def __init__(self, message: str, residual: Optional[float] = None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)
