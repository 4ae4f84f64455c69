"""Exception types shared across burstline modules.

The CLI maps these onto process exit codes, so parse problems, data
problems and feasibility problems must stay distinguishable.
"""

from __future__ import annotations


class CsvFormatError(ValueError):
    """A CSV input could not be parsed. Carries the offending 1-based line."""

    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class InsufficientDataError(ValueError):
    """Too few distinct samples to fit a model."""


class ModelFormatError(ValueError):
    """A serialized model file is malformed."""


class ScenarioError(ValueError):
    """A scenario file is malformed, inconsistent, or has unknown keys."""


class CheckpointError(ValueError):
    """A checkpoint byte stream is corrupt or inconsistent."""


class InfeasiblePlanError(RuntimeError):
    """A burst plan cannot be satisfied. ``constraint`` names the binding limit."""

    def __init__(self, message: str, constraint: str):
        super().__init__(message)
        self.constraint = constraint


class PhaseError(RuntimeError):
    """An illegal burst controller phase transition was attempted."""


class StallError(RuntimeError):
    """A partition owns columns but its environment has zero live cores."""
