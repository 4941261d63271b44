"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations

from collections.abc import Sequence
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from neurocause.graph import CiStatement

# CLI exit codes
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_ANALYSIS = 3


class NeurocauseError(Exception):
    """Base class for every error raised by neurocause."""

    exit_code: int = EXIT_USAGE


class InputError(NeurocauseError, ValueError):
    """Invalid identifiers, parameters, files or statement sets."""

    exit_code = EXIT_USAGE


class CapacityError(NeurocauseError):
    """The request exceeds the exhaustive-search cap."""

    exit_code = EXIT_ANALYSIS


class DegenerateDataError(NeurocauseError):
    """Data cannot support the requested test (singular, single-class...)."""

    exit_code = EXIT_ANALYSIS


class FaithfulnessViolation(NeurocauseError):
    """No enumerated structure reproduces the observed independences."""

    exit_code = EXIT_ANALYSIS

    def __init__(self, message: str, statements: Sequence[CiStatement]) -> None:
        super().__init__(message)
        self.statements = tuple(statements)

    def __str__(self) -> str:
        lines = [super().__str__()]
        lines.extend(f"  {statement}" for statement in self.statements)
        return "\n".join(lines)
