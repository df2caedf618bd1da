"""Shared exception types.

ParseError and ValidationError cover bad input files, ConfigError covers bad
experiment wiring, SimulationError covers runs that cannot finish. The CLI
maps the first three to exit code 2 and the last to exit code 3.
"""

from __future__ import annotations


class SpotSimError(Exception):
    """Base class for all spotsim errors."""


class ParseError(SpotSimError):
    """Input file content that cannot be read at all (bad syntax, bad header)."""

    def __init__(self, message: str, *, path=None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix += f"{path}: "
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)


class ValidationError(SpotSimError):
    """Readable input that violates a domain invariant (negative price, empty trace, ...)."""


class ConfigError(SpotSimError):
    """Bad experiment, catalog, policy, or injector configuration."""


class SimulationError(SpotSimError):
    """A simulation that could not run to completion."""
