"""Exception hierarchy. CLI exit codes are attached to each class."""

from __future__ import annotations


class CatsynthError(Exception):
    exit_code = 1


class InputError(CatsynthError, ValueError):
    """Bad data, config, or arguments supplied by the caller."""

    exit_code = 2


class StructuralError(InputError):
    """Graph structure is invalid (cycle, self-loop, unknown node)."""


class ModelError(CatsynthError, ArithmeticError):
    """Numeric or model failure: degenerate rows, failed factorization, impossible records."""

    exit_code = 3


class InconsistentEvidenceError(CatsynthError):
    """Evidence has probability zero under the model."""

    exit_code = 4
