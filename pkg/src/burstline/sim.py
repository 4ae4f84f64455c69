"""Synchronized hybrid execution simulator.

Each timestep advances the whole domain: the cluster side and the cloud
side each work their own column range concurrently, then exchange halo
state across the ownership boundary. The step therefore costs the slower
side plus the boundary synchronization, and an idle side (no columns)
costs nothing.

The run loop drives the monitor after every step and hands projected
overruns to the burst planner, subject to the scenario's policy: a
warmup period that never triggers, a single burst unless repeat bursts
are enabled, and a cooldown of one monitor window between attempts.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, replace

from .burst import (
    BurstPlan,
    Phase,
    RunState,
    apply_burst,
    initial_state,
    plan_burst,
    read_checkpoint,
    transition,
    write_checkpoint,
)
from .errors import CsvFormatError, InfeasiblePlanError, StallError
from .monitor import (
    BurstNeeded,
    MonitorState,
    StepRecord,
    check_deadline,
    estimate_total,
    record_step,
)
from .perfmodel import predicted_seconds
from .scenario import (
    Contention,
    DeadlineChange,
    EnvironmentState,
    Event,
    NodeDown,
    NodeUp,
    OverheadParams,
    Scenario,
)


def step_time(env: EnvironmentState, spec, columns_owned: int) -> float:
    """Wall seconds one side spends advancing its columns one timestep.

    The side's share of the domain scales the full-domain prediction, and
    the contention factor stretches it. A side with no columns is idle
    and free; a side with columns but no live cores cannot advance at
    all, which is a stall rather than a cost.
    """
    if columns_owned < 0 or columns_owned > spec.nx:
        raise ValueError(f"columns owned must be within [0, {spec.nx}], got {columns_owned}")
    if columns_owned == 0:
        return 0.0
    cores = env.available_cores
    if cores == 0:
        raise StallError(
            f"{env.label} environment owns {columns_owned} columns but has no live cores"
        )
    full_domain = predicted_seconds(env.model, cores)
    return (full_domain / spec.timesteps) * (columns_owned / spec.nx) * env.contention_factor


def sync_seconds(overheads: OverheadParams) -> float:
    """Boundary exchange cost per synchronized step."""
    return overheads.sync_payload_bytes * 8.0 / overheads.network_bandwidth_bits_per_s


def hybrid_step_time(state: RunState) -> float:
    """Cost of one synchronized step across both sides of the split."""
    spec = state.scenario.domain
    cluster = step_time(state.cluster_env, spec, state.cluster_columns)
    cloud = step_time(state.cloud_env, spec, state.cloud_columns)
    if state.cluster_columns == 0 or state.cloud_columns == 0:
        boundary = 0.0
    else:
        boundary = sync_seconds(state.scenario.overheads)
    return max(cluster, cloud) + boundary


@dataclass(frozen=True)
class TraceRow:
    step: int
    phase: str
    cluster_columns: int
    cloud_columns: int
    step_seconds: float
    clock_seconds: float
    estimate_seconds: float | None
    decision: str
    event: str


@dataclass(frozen=True)
class RunResult:
    rows: tuple[TraceRow, ...]
    deadline_met: bool
    completion_seconds: float
    deadline_seconds: float
    burst_steps: tuple[int, ...]
    plans: tuple[BurstPlan, ...]
    final_gamma: int
    final_cloud_cores: int

    @property
    def step_rows(self) -> tuple[TraceRow, ...]:
        return tuple(r for r in self.rows if r.phase in ("running", "running_hybrid"))


def _apply_event(event: Event, state: RunState, monitor: MonitorState):
    """Mutate the cluster environment (or the deadline) and tag the trace."""
    if isinstance(event, NodeDown):
        for node in state.cluster_env.nodes:
            if node.node_id == event.node_id:
                node.up = False
        return monitor, f"node_down:{event.node_id}"
    if isinstance(event, NodeUp):
        for node in state.cluster_env.nodes:
            if node.node_id == event.node_id:
                node.up = True
        return monitor, f"node_up:{event.node_id}"
    if isinstance(event, Contention):
        state.cluster_env.contention_factor = event.factor
        return monitor, f"contention:{event.factor!r}"
    if isinstance(event, DeadlineChange):
        monitor = replace(monitor, deadline_seconds=event.deadline_seconds)
        return monitor, f"deadline_change:{event.deadline_seconds!r}"
    raise TypeError(f"unknown event type {type(event).__name__}")


def _gate_reason(step: int, policy, total_steps: int, burst_count: int,
                 cooldown_until: int) -> str | None:
    """Why a burst_needed verdict is not acted on this step, if it is not."""
    if not policy.burst_enabled:
        return "disabled"
    if step < policy.warmup_steps:
        return "warmup"
    if burst_count > 0 and not policy.reburst:
        return "budget"
    if step < cooldown_until:
        return "cooldown"
    if step + 1 >= total_steps:
        return "last_step"
    return None


def run(scenario: Scenario) -> RunResult:
    """Simulate the scenario end to end and return the full trace."""
    state = initial_state(scenario)
    policy = scenario.policy
    monitor = MonitorState(
        deadline_seconds=scenario.deadline_seconds,
        window=policy.window,
        slack_fraction=policy.slack_fraction,
        warmup_steps=policy.warmup_steps,
    )
    total = scenario.domain.timesteps
    events_by_step: dict[int, list[Event]] = {}
    for event in scenario.events:
        events_by_step.setdefault(event.at_step, []).append(event)

    rows: list[TraceRow] = []
    burst_steps: list[int] = []
    plans: list[BurstPlan] = []
    cooldown_until = 0

    while state.step_index < total:
        step = state.step_index
        tags: list[str] = []
        for event in events_by_step.get(step, ()):
            monitor, tag = _apply_event(event, state, monitor)
            tags.append(tag)

        duration = hybrid_step_time(state)
        state.clock_seconds += duration
        state.step_index = step + 1
        label = "cluster" if state.gamma == 0 else "hybrid"
        monitor = record_step(monitor, StepRecord(step, duration, label))
        estimate = estimate_total(monitor, total)
        decision = check_deadline(monitor, estimate)
        decision_label = "burst_needed" if isinstance(decision, BurstNeeded) else "ok"

        plan: BurstPlan | None = None
        if isinstance(decision, BurstNeeded):
            reason = _gate_reason(step, policy, total, len(burst_steps), cooldown_until)
            if reason is not None:
                tags.append(f"gated:{reason}")
            else:
                try:
                    plan = plan_burst(
                        decision.surplus_seconds,
                        scenario,
                        state.cluster_env.available_cores,
                        monitor.deadline_seconds,
                        trigger_step=state.step_index,
                        current_gamma=state.gamma,
                        cluster_contention=state.cluster_env.contention_factor,
                        cloud_contention=state.cloud_env.contention_factor,
                    )
                except InfeasiblePlanError as exc:
                    tags.append(f"plan_infeasible:{exc.constraint}")
                    plan = None
                    cooldown_until = state.step_index + policy.window
                else:
                    if plan.is_noop:
                        tags.append("plan_noop")
                        plan = None
                        cooldown_until = state.step_index + policy.window
                    else:
                        tags.append(
                            f"burst:gamma={plan.gamma}"
                            f":cloud_cores={plan.cloud_core_target}"
                        )

        rows.append(TraceRow(
            step=step,
            phase=state.controller.phase.value,
            cluster_columns=state.cluster_columns,
            cloud_columns=state.cloud_columns,
            step_seconds=duration,
            clock_seconds=state.clock_seconds,
            estimate_seconds=estimate,
            decision=decision_label,
            event=";".join(tags),
        ))

        if plan is not None:
            checkpoint = write_checkpoint(state)
            clock_before = state.clock_seconds
            state.controller = transition(
                state.controller, Phase.CHECKPOINTING,
                step=plan.trigger_step, plan=plan,
            )
            rows.append(TraceRow(
                step=plan.trigger_step,
                phase=Phase.CHECKPOINTING.value,
                cluster_columns=state.cluster_columns,
                cloud_columns=state.cloud_columns,
                step_seconds=plan.checkpoint_seconds,
                clock_seconds=clock_before + plan.checkpoint_seconds,
                estimate_seconds=None,
                decision="",
                event="checkpoint",
            ))
            state.controller = transition(state.controller, Phase.PROVISIONING)
            rows.append(TraceRow(
                step=plan.trigger_step,
                phase=Phase.PROVISIONING.value,
                cluster_columns=state.cluster_columns,
                cloud_columns=state.cloud_columns,
                step_seconds=plan.provisioning_seconds,
                clock_seconds=clock_before + plan.checkpoint_seconds
                + plan.provisioning_seconds,
                estimate_seconds=None,
                decision="",
                event=f"provision:{plan.cloud_core_target}",
            ))
            state.controller = transition(state.controller, Phase.MIGRATING)
            rows.append(TraceRow(
                step=plan.trigger_step,
                phase=Phase.MIGRATING.value,
                cluster_columns=state.cluster_columns,
                cloud_columns=state.cloud_columns,
                step_seconds=plan.transfer_seconds,
                clock_seconds=clock_before + plan.overhead_seconds(),
                estimate_seconds=None,
                decision="",
                event=f"migrate:{plan.gamma}",
            ))
            state = read_checkpoint(checkpoint, state)
            state = apply_burst(state, plan)
            burst_steps.append(plan.trigger_step)
            plans.append(plan)
            cooldown_until = plan.trigger_step + policy.window

    state.controller = transition(state.controller, Phase.DONE, step=total)
    return RunResult(
        rows=tuple(rows),
        deadline_met=state.clock_seconds <= monitor.deadline_seconds,
        completion_seconds=state.clock_seconds,
        deadline_seconds=monitor.deadline_seconds,
        burst_steps=tuple(burst_steps),
        plans=tuple(plans),
        final_gamma=state.gamma,
        final_cloud_cores=state.cloud_env.available_cores,
    )


def write_trace_csv(result: RunResult, path: str | os.PathLike):
    """Trace rows plus a ``#``-prefixed summary footer, reproducibly formatted."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(_TRACE_HEADER)
        for row in result.rows:
            writer.writerow([
                row.step,
                row.phase,
                row.cluster_columns,
                row.cloud_columns,
                repr(row.step_seconds),
                repr(row.clock_seconds),
                "" if row.estimate_seconds is None else repr(row.estimate_seconds),
                row.decision,
                row.event,
            ])
        burst_steps = ",".join(str(s) for s in result.burst_steps) or "none"
        handle.write(f"# deadline_met={result.deadline_met}\n")
        handle.write(f"# completion_seconds={result.completion_seconds!r}\n")
        handle.write(f"# deadline_seconds={result.deadline_seconds!r}\n")
        handle.write(f"# bursts={len(result.burst_steps)}\n")
        handle.write(f"# burst_steps={burst_steps}\n")
        handle.write(f"# final_gamma={result.final_gamma}\n")
        handle.write(f"# final_cloud_cores={result.final_cloud_cores}\n")


_TRACE_HEADER = [
    "step", "phase", "cluster_cols", "cloud_cols",
    "step_seconds", "clock_seconds", "estimate_seconds",
    "decision", "event",
]


def read_trace_csv(path: str | os.PathLike) -> tuple[TraceRow, ...]:
    """Parse a trace written by write_trace_csv, ignoring the summary footer."""
    rows: list[TraceRow] = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        for line_number, cells in enumerate(reader, start=1):
            if not cells:
                continue
            if cells[0].startswith("#"):
                continue
            if line_number == 1:
                if cells != _TRACE_HEADER:
                    raise CsvFormatError(
                        f"trace header mismatch: expected {','.join(_TRACE_HEADER)}",
                        line_number=1,
                    )
                continue
            if len(cells) != len(_TRACE_HEADER):
                raise CsvFormatError(
                    f"expected {len(_TRACE_HEADER)} cells, got {len(cells)}",
                    line_number=line_number,
                )
            try:
                rows.append(TraceRow(
                    step=int(cells[0]),
                    phase=cells[1],
                    cluster_columns=int(cells[2]),
                    cloud_columns=int(cells[3]),
                    step_seconds=float(cells[4]),
                    clock_seconds=float(cells[5]),
                    estimate_seconds=float(cells[6]) if cells[6] else None,
                    decision=cells[7],
                    event=cells[8],
                ))
            except ValueError as exc:
                raise CsvFormatError(str(exc), line_number=line_number) from exc
    if not rows:
        raise CsvFormatError("trace holds no rows", line_number=1)
    return tuple(rows)


def write_report_csvs(rows: tuple[TraceRow, ...], out_dir: str | os.PathLike):
    """Per-step series derived from the trace: clock, estimate, ownership."""
    os.makedirs(out_dir, exist_ok=True)
    steps = tuple(r for r in rows if r.phase in ("running", "running_hybrid"))
    with open(os.path.join(out_dir, "time_vs_step.csv"), "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["step", "clock_seconds"])
        for row in steps:
            writer.writerow([row.step, repr(row.clock_seconds)])
    with open(os.path.join(out_dir, "estimate_vs_step.csv"), "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["step", "estimate_seconds"])
        for row in steps:
            writer.writerow([
                row.step,
                "" if row.estimate_seconds is None else repr(row.estimate_seconds),
            ])
    with open(os.path.join(out_dir, "ownership_vs_step.csv"), "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["step", "cluster_cols", "cloud_cols"])
        for row in steps:
            writer.writerow([row.step, row.cluster_columns, row.cloud_columns])


# --- exhaustive burst search ------------------------------------------------


def _timeline(scenario: Scenario) -> tuple[list[tuple[int, int, float]], float]:
    """Cluster capacity over time and the final deadline.

    Returns ((at_step, cores, contention), ...) sorted by step, starting
    at step 0, plus the deadline after every change event. Cloud capacity
    is whatever the candidate burst provisions, so only the cluster side
    is tracked here.
    """
    up = {node.node_id: node.up for node in scenario.cluster.nodes}
    cores_of = {node.node_id: node.cores for node in scenario.cluster.nodes}
    contention = scenario.cluster.contention_factor
    deadline = scenario.deadline_seconds
    current_cores = sum(cores_of[n] for n, is_up in up.items() if is_up)
    points = [(0, current_cores, contention)]
    for event in sorted(scenario.events, key=lambda e: e.at_step):
        if isinstance(event, (NodeDown, NodeUp)):
            up[event.node_id] = isinstance(event, NodeUp)
            current_cores = sum(cores_of[n] for n, is_up in up.items() if is_up)
        elif isinstance(event, Contention):
            contention = event.factor
        elif isinstance(event, DeadlineChange):
            deadline = event.deadline_seconds
            continue
        points.append((event.at_step, current_cores, contention))
    return points, deadline


def brute_force_min_gamma(scenario: Scenario, trigger_step: int) -> tuple[int, int] | None:
    """Smallest burst at ``trigger_step`` that still meets the deadline.

    Tries every column count in ascending order and, within it, every
    cloud core count, simulating the whole remaining run segment by
    segment. Returns (columns, cloud cores), where (0, 0) means the run
    finishes on time without bursting, or None when no burst within the
    domain and the cloud pool can save it. Slow but assumption-free; the
    planner's closed forms can be checked against it.
    """
    spec = scenario.domain
    total = spec.timesteps
    if not (0 < trigger_step < total):
        raise ValueError(f"trigger step must be within (0, {total}), got {trigger_step}")
    points, deadline = _timeline(scenario)
    overheads = scenario.overheads
    boundary = sync_seconds(overheads)
    cloud_model = scenario.cloud.model
    cloud_contention = scenario.cloud.contention_factor
    cluster_model = scenario.cluster.model

    def cluster_step_cost(cores: int, contention: float, columns: int) -> float | None:
        if columns == 0:
            return 0.0
        if cores == 0:
            return None
        return (
            predicted_seconds(cluster_model, cores) / total
            * (columns / spec.nx) * contention
        )

    def segment_costs(start: int, end: int, gamma: int,
                      cloud_cores_n: int) -> float | None:
        """Wall seconds for steps start..end-1 under a fixed split."""
        cloud_cols = gamma
        cluster_cols = spec.nx - gamma
        if cloud_cols > 0:
            cloud_per_step = (
                predicted_seconds(cloud_model, cloud_cores_n) / total
                * (cloud_cols / spec.nx) * cloud_contention
            )
        else:
            cloud_per_step = 0.0
        sync = boundary if (cluster_cols > 0 and cloud_cols > 0) else 0.0
        elapsed = 0.0
        for index, (at_step, cores, contention) in enumerate(points):
            seg_start = max(at_step, start)
            seg_end = points[index + 1][0] if index + 1 < len(points) else end
            seg_end = min(seg_end, end)
            if seg_end <= seg_start:
                continue
            cluster_per_step = cluster_step_cost(cores, contention, cluster_cols)
            if cluster_per_step is None:
                return None
            elapsed += (seg_end - seg_start) * (max(cluster_per_step, cloud_per_step) + sync)
        return elapsed

    prefix = segment_costs(0, trigger_step, 0, 0)
    if prefix is None:
        return None

    checkpoint_seconds = overheads.checkpoint_bytes / overheads.disk_rate_bytes_per_s
    for gamma in range(0, spec.nx + 1):
        if gamma == 0:
            remainder = segment_costs(trigger_step, total, 0, 0)
            if remainder is not None and prefix + remainder <= deadline:
                return (0, 0)
            continue
        overhead = (
            checkpoint_seconds
            + overheads.provisioning_seconds
            + overheads.checkpoint_bytes * (gamma / spec.nx) * 8.0
            / overheads.network_bandwidth_bits_per_s
        )
        for cores in range(1, scenario.cloud_max_cores + 1):
            remainder = segment_costs(trigger_step, total, gamma, cores)
            if remainder is None:
                continue
            if prefix + overhead + remainder <= deadline:
                return (gamma, cores)
    return None
