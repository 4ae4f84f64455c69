"""Burst planning, the controller state machine, and checkpoint capture.

A burst moves a block of element columns plus a slice of cloud capacity
into play when the monitor projects a deadline overrun. The plan glues
together three independent sizings:

* cores the deadline demands, from inverting the cluster's log law;
* cloud cores covering the deficit, scaled by the cross-environment
  correction factor;
* columns to migrate, from inverting the linear split law at the
  projected overrun.

The deficit sizing can legitimately come out at zero (the deadline is
loose relative to the clean law even though live steps are slow, for
example under contention). A migration still needs somewhere to run, so
the cloud allocation is floored at the smallest core count whose
per-step time on the migrated columns does not exceed the cluster
side's: a cloud side slower than the cluster it is relieving would
dominate every synchronized step and defeat the burst.
"""

from __future__ import annotations

import copy
import enum
import os
import random
import struct
from dataclasses import dataclass, replace

from .domain import split_domain
from .errors import CheckpointError, InfeasiblePlanError, PhaseError
from .perfmodel import (
    cloud_cores,
    correction_factor,
    gamma_for_time,
    predicted_seconds,
    required_cores,
)
from .scenario import EnvironmentState, NodeState, Scenario


class Phase(enum.Enum):
    RUNNING = "running"
    CHECKPOINTING = "checkpointing"
    PROVISIONING = "provisioning"
    MIGRATING = "migrating"
    RUNNING_HYBRID = "running_hybrid"
    DONE = "done"


_LEGAL_TRANSITIONS = {
    (Phase.RUNNING, Phase.CHECKPOINTING),
    (Phase.CHECKPOINTING, Phase.PROVISIONING),
    (Phase.PROVISIONING, Phase.MIGRATING),
    (Phase.MIGRATING, Phase.RUNNING_HYBRID),
    (Phase.RUNNING_HYBRID, Phase.DONE),
    (Phase.RUNNING, Phase.DONE),
}

# Available only when the repeat policy is on.
_REBURST_TRANSITION = (Phase.RUNNING_HYBRID, Phase.CHECKPOINTING)


@dataclass(frozen=True)
class BurstPlan:
    """Sizing and cost of one burst."""

    trigger_step: int
    c_required: int
    correction: float
    cloud_core_target: int
    gamma: int
    checkpoint_bytes: int
    checkpoint_seconds: float
    provisioning_seconds: float
    transfer_seconds: float

    def __post_init__(self):
        if self.trigger_step < 0:
            raise ValueError(f"trigger step must be >= 0, got {self.trigger_step}")
        if self.c_required < 1:
            raise ValueError(f"required cores must be >= 1, got {self.c_required}")
        if self.cloud_core_target < 0:
            raise ValueError(f"cloud core target must be >= 0, got {self.cloud_core_target}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        for name, value in (
            ("checkpoint_seconds", self.checkpoint_seconds),
            ("provisioning_seconds", self.provisioning_seconds),
            ("transfer_seconds", self.transfer_seconds),
        ):
            if value < 0.0:
                raise ValueError(f"{name} must be >= 0, got {value}")

    @property
    def is_noop(self) -> bool:
        return self.gamma == 0

    def overhead_seconds(self) -> float:
        return self.checkpoint_seconds + self.provisioning_seconds + self.transfer_seconds


@dataclass(frozen=True)
class ControllerState:
    """Where the burst controller sits in its lifecycle."""

    phase: Phase = Phase.RUNNING
    current_step: int = 0
    active_plan: BurstPlan | None = None
    allow_reburst: bool = False


def transition(controller: ControllerState, to: Phase, *,
               step: int | None = None,
               plan: BurstPlan | None = None) -> ControllerState:
    """Move the controller to ``to``, rejecting edges outside the lifecycle."""
    edge = (controller.phase, to)
    legal = edge in _LEGAL_TRANSITIONS or (
        controller.allow_reburst and edge == _REBURST_TRANSITION
    )
    if not legal:
        raise PhaseError(f"illegal controller transition {controller.phase.value} -> {to.value}")
    return replace(
        controller,
        phase=to,
        current_step=controller.current_step if step is None else step,
        active_plan=controller.active_plan if plan is None else plan,
    )


def plan_burst(
    surplus_seconds: float,
    scenario: Scenario,
    cluster_cores: int,
    deadline_seconds: float,
    *,
    trigger_step: int = 0,
    current_gamma: int = 0,
    cluster_contention: float = 1.0,
    cloud_contention: float = 1.0,
) -> BurstPlan:
    """Size a burst for a projected overrun of ``surplus_seconds``.

    Raises InfeasiblePlanError when the column demand exceeds the domain
    or the cloud core demand exceeds the configured pool; the error names
    the binding constraint.
    """
    if not (surplus_seconds > 0.0):
        raise ValueError(f"surplus must be positive, got {surplus_seconds}")
    if cluster_cores < 0:
        raise ValueError(f"cluster core count must be >= 0, got {cluster_cores}")
    nx = scenario.domain.nx
    if not (0 <= current_gamma <= nx):
        raise ValueError(f"current gamma must be within [0, {nx}], got {current_gamma}")

    overheads = scenario.overheads
    checkpoint_seconds = overheads.checkpoint_bytes / overheads.disk_rate_bytes_per_s

    c_required = required_cores(scenario.cluster.model, deadline_seconds)
    correction = correction_factor(scenario.cloud.model, scenario.cluster.model, c_required)
    deficit_cores = cloud_cores(c_required, cluster_cores, correction)
    gamma = gamma_for_time(scenario.split_model, surplus_seconds)

    if gamma == 0:
        # The overrun is within the split law's intercept: migrating any
        # columns would not pay for itself. Only the checkpoint was sunk.
        return BurstPlan(
            trigger_step=trigger_step,
            c_required=c_required,
            correction=correction,
            cloud_core_target=0,
            gamma=0,
            checkpoint_bytes=overheads.checkpoint_bytes,
            checkpoint_seconds=checkpoint_seconds,
            provisioning_seconds=0.0,
            transfer_seconds=0.0,
        )

    total_gamma = current_gamma + gamma
    if total_gamma > nx:
        raise InfeasiblePlanError(
            f"burst demands {total_gamma} columns but the domain has {nx}",
            constraint="gamma",
        )

    # Pace floor: the migrated columns must not run slower per step than
    # the columns left behind. When everything migrates there is no
    # cluster side to pace against, so fall back to the clean law's pace.
    cluster_full_equiv = (
        predicted_seconds(scenario.cluster.model, max(cluster_cores, 1))
        * cluster_contention
    )
    if total_gamma < nx:
        pace_target = (
            cluster_full_equiv * (nx - total_gamma) / total_gamma / cloud_contention
        )
    else:
        pace_target = (
            predicted_seconds(scenario.cluster.model, max(cluster_cores, 1))
            / cloud_contention
        )
    floor_cores = required_cores(scenario.cloud.model, pace_target)

    core_target = max(deficit_cores, floor_cores)
    if core_target > scenario.cloud_max_cores:
        raise InfeasiblePlanError(
            f"burst demands {core_target} cloud cores but the pool is capped at "
            f"{scenario.cloud_max_cores}",
            constraint="cloud_cores",
        )

    transfer_seconds = (
        overheads.checkpoint_bytes * (gamma / nx) * 8.0
        / overheads.network_bandwidth_bits_per_s
    )
    return BurstPlan(
        trigger_step=trigger_step,
        c_required=c_required,
        correction=correction,
        cloud_core_target=core_target,
        gamma=gamma,
        checkpoint_bytes=overheads.checkpoint_bytes,
        checkpoint_seconds=checkpoint_seconds,
        provisioning_seconds=overheads.provisioning_seconds,
        transfer_seconds=transfer_seconds,
    )


# --- simulation state and checkpointing ------------------------------------


@dataclass
class RunState:
    """Mutable world state of one simulated run."""

    scenario: Scenario
    step_index: int
    clock_seconds: float
    gamma: int
    cluster_env: EnvironmentState
    cloud_env: EnvironmentState
    controller: ControllerState
    block_size: int
    blocks: tuple[bytes, ...]

    @property
    def cluster_columns(self) -> int:
        return self.scenario.domain.nx - self.gamma

    @property
    def cloud_columns(self) -> int:
        return self.gamma

    def partitions(self):
        return split_domain(self.scenario.domain, self.gamma)


def synthesize_blocks(seed: int, nx: int, block_size: int) -> tuple[bytes, ...]:
    """Deterministic per-column state payloads derived from the seed."""
    if block_size < 0:
        raise ValueError(f"block size must be >= 0, got {block_size}")
    blocks = []
    for column in range(nx):
        rng = random.Random(seed * 1_000_003 + column)
        blocks.append(rng.randbytes(block_size))
    return tuple(blocks)


def initial_state(scenario: Scenario) -> RunState:
    """World state at step zero: everything on the cluster, cloud pool idle."""
    block_size = scenario.overheads.checkpoint_bytes // scenario.domain.nx
    return RunState(
        scenario=scenario,
        step_index=0,
        clock_seconds=0.0,
        gamma=0,
        cluster_env=copy.deepcopy(scenario.cluster),
        cloud_env=copy.deepcopy(scenario.cloud),
        controller=ControllerState(allow_reburst=scenario.policy.reburst),
        block_size=block_size,
        blocks=synthesize_blocks(scenario.policy.seed, scenario.domain.nx, block_size),
    )


CHECKPOINT_MAGIC = b"BRST"
CHECKPOINT_VERSION = 1

# Little-endian: magic, u32 version, u64 step, u32 nx, u32 ny, u32 gamma,
# u64 payload block size. nx payload blocks follow.
_HEADER = struct.Struct("<4sIQIIIQ")


@dataclass(frozen=True)
class Checkpoint:
    """Application state captured at a step boundary."""

    step_index: int
    nx: int
    ny: int
    gamma: int
    block_size: int
    blocks: tuple[bytes, ...]
    version: int = CHECKPOINT_VERSION

    def __post_init__(self):
        if len(self.blocks) != self.nx:
            raise ValueError(
                f"checkpoint holds {len(self.blocks)} blocks for {self.nx} columns"
            )
        if any(len(block) != self.block_size for block in self.blocks):
            raise ValueError("checkpoint block sizes are inconsistent")


def write_checkpoint(state: RunState) -> Checkpoint:
    """Capture the paused run: step position, ownership split, column state."""
    return Checkpoint(
        step_index=state.step_index,
        nx=state.scenario.domain.nx,
        ny=state.scenario.domain.ny,
        gamma=state.gamma,
        block_size=state.block_size,
        blocks=state.blocks,
    )


def read_checkpoint(checkpoint: Checkpoint, state: RunState) -> RunState:
    """Assimilate a checkpoint into ``state`` verbatim.

    Restores the step position, ownership split and per-column payloads;
    the clock and environments stay as they are, because restart time has
    already been paid through the plan's overheads.
    """
    spec = state.scenario.domain
    if (checkpoint.nx, checkpoint.ny) != (spec.nx, spec.ny):
        raise CheckpointError(
            f"checkpoint is for a {checkpoint.nx}x{checkpoint.ny} domain, "
            f"run uses {spec.nx}x{spec.ny}"
        )
    state.step_index = checkpoint.step_index
    state.gamma = checkpoint.gamma
    state.block_size = checkpoint.block_size
    state.blocks = checkpoint.blocks
    return state


def checkpoint_to_bytes(checkpoint: Checkpoint) -> bytes:
    header = _HEADER.pack(
        CHECKPOINT_MAGIC,
        checkpoint.version,
        checkpoint.step_index,
        checkpoint.nx,
        checkpoint.ny,
        checkpoint.gamma,
        checkpoint.block_size,
    )
    return header + b"".join(checkpoint.blocks)


def checkpoint_from_bytes(data: bytes) -> Checkpoint:
    if len(data) < _HEADER.size:
        raise CheckpointError(
            f"checkpoint truncated: {len(data)} bytes is shorter than the header"
        )
    magic, version, step_index, nx, ny, gamma, block_size = _HEADER.unpack_from(data)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(f"bad checkpoint magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {version}, expected {CHECKPOINT_VERSION}"
        )
    payload = data[_HEADER.size:]
    expected = nx * block_size
    if len(payload) != expected:
        raise CheckpointError(
            f"checkpoint payload holds {len(payload)} bytes, header promises "
            f"{nx} blocks of {block_size} ({expected} bytes)"
        )
    blocks = tuple(
        bytes(payload[i * block_size:(i + 1) * block_size]) for i in range(nx)
    )
    return Checkpoint(
        step_index=step_index,
        nx=nx,
        ny=ny,
        gamma=gamma,
        block_size=block_size,
        blocks=blocks,
        version=version,
    )


def save_checkpoint(checkpoint: Checkpoint, path: str | os.PathLike):
    with open(path, "wb") as handle:
        handle.write(checkpoint_to_bytes(checkpoint))


def load_checkpoint(path: str | os.PathLike) -> Checkpoint:
    with open(path, "rb") as handle:
        return checkpoint_from_bytes(handle.read())


def _provisioned_nodes(pool: list[NodeState], cores: int) -> list[NodeState]:
    """Node list holding exactly ``cores`` cores, shaped like the pool's nodes."""
    per_node = pool[0].cores if pool else 1
    if per_node < 1:
        per_node = 1
    nodes = []
    remaining = cores
    node_id = 0
    while remaining > 0:
        take = min(per_node, remaining)
        nodes.append(NodeState(node_id=node_id, cores=take, up=True))
        remaining -= take
        node_id += 1
    return nodes


def apply_burst(state: RunState, plan: BurstPlan) -> RunState:
    """Execute a plan on a migrating run.

    The domain is re-split with the plan's additional columns, the cloud
    pool is brought up to the plan's core target (never shrunk), and the
    clock absorbs the checkpoint, provisioning and transfer costs. The
    step counter does not move: the run restarts at the stopped step.
    """
    if state.controller.phase is not Phase.MIGRATING:
        raise PhaseError(
            f"apply_burst requires the migrating phase, controller is in "
            f"{state.controller.phase.value}"
        )
    new_gamma = state.gamma + plan.gamma
    if new_gamma > state.scenario.domain.nx:
        raise InfeasiblePlanError(
            f"burst demands {new_gamma} columns but the domain has "
            f"{state.scenario.domain.nx}",
            constraint="gamma",
        )
    if plan.gamma > 0:
        current = state.cloud_env.available_cores
        target = max(current, plan.cloud_core_target)
        if target > current:
            state.cloud_env.nodes = _provisioned_nodes(state.cloud_env.nodes, target)
    state.gamma = new_gamma
    state.clock_seconds += plan.overhead_seconds()
    state.controller = transition(state.controller, Phase.RUNNING_HYBRID, plan=plan)
    return state
