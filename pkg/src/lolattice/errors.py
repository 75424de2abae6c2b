"""Exception types shared across the package.

ValueError subclasses signal bad inputs or configuration; RuntimeError
subclasses signal numerical failure of an otherwise valid request. The CLI
maps the former to exit code 1 and the latter to exit code 2.
"""

from __future__ import annotations


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class SnapshotFormatError(ValueError):
    """Snapshot file cannot be parsed or has an unsupported version."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConstructionError(ValueError):
    """A model or steady-state constructor received data violating its contract."""


class SingularityError(RuntimeError):
    """An amplitude entered the guard band around zero where phases are meaningless."""

    def __init__(self, cell: tuple[int, int], value: float, floor: float):
        super().__init__(
            f"amplitude {value:.3e} at cell {cell} fell below the floor {floor:.3e}"
        )
        self.cell = cell
        self.value = value
        self.floor = floor


class ConvergenceError(RuntimeError):
    """An iterative solver stopped without reaching its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        if residual is not None:
            message = f"{message} (best residual {residual:.3e})"
        super().__init__(message)
        self.residual = residual


class IntegrationError(RuntimeError):
    """Time integration produced a non-finite state."""


class FitError(RuntimeError):
    """A decay fit could not be performed on the given series."""
