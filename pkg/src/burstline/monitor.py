"""Runtime monitoring of a timestep run and deadline projection.

The monitor records per-timestep durations and projects the total
runtime as exact elapsed time plus a rolling-mean extrapolation of the
remaining steps. The window is deliberately short so a perturbation
(contention, a lost node) shows up in the projection within a few steps
instead of being averaged away by the whole history.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, replace

from .errors import InsufficientDataError

DEFAULT_WINDOW = 10
DEFAULT_WARMUP_STEPS = 5


@dataclass(frozen=True)
class StepRecord:
    """Duration of one completed timestep."""

    step_index: int
    duration_seconds: float
    environment: str

    def __post_init__(self):
        if self.step_index < 0:
            raise ValueError(f"step index must be >= 0, got {self.step_index}")
        if not (self.duration_seconds > 0.0) or not math.isfinite(self.duration_seconds):
            raise ValueError(f"duration must be positive, got {self.duration_seconds}")


@dataclass(frozen=True)
class MonitorState:
    """Append-only monitor of a run against a deadline.

    ``elapsed_seconds`` caches the left-to-right sum of all recorded
    durations so estimates stay cheap on long runs. ``warmup_steps`` is
    the number of initial records the run loop waits for before acting
    on deadline checks.
    """

    deadline_seconds: float
    window: int = DEFAULT_WINDOW
    slack_fraction: float = 0.0
    warmup_steps: int = DEFAULT_WARMUP_STEPS
    records: tuple[StepRecord, ...] = ()
    elapsed_seconds: float = 0.0

    def __post_init__(self):
        if not (self.deadline_seconds > 0.0) or not math.isfinite(self.deadline_seconds):
            raise ValueError(f"deadline must be positive, got {self.deadline_seconds}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.slack_fraction < 0.0:
            raise ValueError(f"slack fraction must be >= 0, got {self.slack_fraction}")
        if self.warmup_steps < 0:
            raise ValueError(f"warmup steps must be >= 0, got {self.warmup_steps}")


@dataclass(frozen=True)
class Ok:
    """The projected runtime fits the deadline."""


@dataclass(frozen=True)
class BurstNeeded:
    """The projected runtime overruns the deadline by ``surplus_seconds``."""

    surplus_seconds: float


Decision = Ok | BurstNeeded


def record_step(state: MonitorState, record: StepRecord) -> MonitorState:
    """Append one step record, enforcing gap-free ascending step indices."""
    expected = state.records[-1].step_index + 1 if state.records else 0
    if record.step_index != expected:
        raise ValueError(
            f"out-of-order step record: expected index {expected}, got {record.step_index}"
        )
    return replace(
        state,
        records=state.records + (record,),
        elapsed_seconds=state.elapsed_seconds + record.duration_seconds,
    )


def estimate_total(state: MonitorState, total_steps: int) -> float:
    """Project the total runtime: exact elapsed plus rolling-mean remainder."""
    done = len(state.records)
    if done == 0:
        raise InsufficientDataError("cannot estimate with no recorded steps")
    if total_steps < done:
        raise ValueError(f"total steps {total_steps} is less than recorded count {done}")
    tail = state.records[-state.window:]
    mean = sum(r.duration_seconds for r in tail) / len(tail)
    return state.elapsed_seconds + mean * (total_steps - done)


def check_deadline(state: MonitorState, estimate_seconds: float) -> Decision:
    """Compare a runtime projection against the deadline plus slack.

    The comparison is strict: a projection exactly on the threshold is
    still Ok, so bursting triggers only on a genuine overrun.
    """
    if estimate_seconds < 0.0 or not math.isfinite(estimate_seconds):
        raise ValueError(f"estimate must be >= 0 and finite, got {estimate_seconds}")
    threshold = state.deadline_seconds * (1.0 + state.slack_fraction)
    if estimate_seconds > threshold:
        return BurstNeeded(surplus_seconds=estimate_seconds - state.deadline_seconds)
    return Ok()


def export_csv(state: MonitorState, total_steps: int, path: str | os.PathLike):
    """Write the recorded history with per-prefix estimates and decisions.

    Each row reflects what the monitor knew right after that step: the
    estimate over the records up to and including it, and the decision
    that estimate produces.
    """
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["step_index", "duration_seconds", "environment", "estimate_seconds", "decision"]
        )
        prefix = replace(state, records=(), elapsed_seconds=0.0)
        for record in state.records:
            prefix = record_step(prefix, record)
            estimate = estimate_total(prefix, total_steps)
            decision = check_deadline(prefix, estimate)
            writer.writerow(
                [
                    record.step_index,
                    repr(record.duration_seconds),
                    record.environment,
                    repr(estimate),
                    "burst_needed" if isinstance(decision, BurstNeeded) else "ok",
                ]
            )
