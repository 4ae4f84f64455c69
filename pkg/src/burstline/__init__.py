"""Deadline-aware cloud bursting planner and hybrid execution simulator.

The package watches a timestep-parallel run, projects its completion
time from recent step durations, and when the deadline is threatened it
sizes a burst: how many cloud cores to provision and how many domain
columns to migrate. A discrete simulator executes the resulting hybrid
run, checkpointed and synchronized per step, to a reproducible trace.
"""

from __future__ import annotations

from .burst import (
    BurstPlan,
    Checkpoint,
    ControllerState,
    Phase,
    RunState,
    apply_burst,
    checkpoint_from_bytes,
    checkpoint_to_bytes,
    initial_state,
    load_checkpoint,
    plan_burst,
    read_checkpoint,
    save_checkpoint,
    write_checkpoint,
)
from .domain import (
    DomainSpec,
    Partition,
    StripeAssignment,
    assign_stripes,
    boundary_message_bytes,
    degrees_of_freedom,
    merge_partitions,
    split_domain,
)
from .errors import (
    CheckpointError,
    CsvFormatError,
    InfeasiblePlanError,
    InsufficientDataError,
    ModelFormatError,
    PhaseError,
    ScenarioError,
    StallError,
)
from .monitor import (
    BurstNeeded,
    MonitorState,
    Ok,
    StepRecord,
    check_deadline,
    estimate_total,
    record_step,
)
from .perfmodel import (
    CalibrationSample,
    LogLawModel,
    SplitModel,
    cloud_cores,
    correction_factor,
    eval_log_law,
    fit_log_law,
    fit_split_model,
    gamma_for_time,
    load_model,
    predicted_seconds,
    read_calibration_csv,
    required_cores,
    save_model,
)
from .presets import load_preset_model, load_preset_scenario, preset_names
from .scenario import (
    Contention,
    DeadlineChange,
    EnvironmentState,
    NodeDown,
    NodeState,
    NodeUp,
    OverheadParams,
    PolicyParams,
    Scenario,
    load_scenario,
    parse_scenario,
    save_scenario,
)
from .sim import (
    RunResult,
    TraceRow,
    brute_force_min_gamma,
    hybrid_step_time,
    read_trace_csv,
    run,
    step_time,
    sync_seconds,
    write_report_csvs,
    write_trace_csv,
)

__version__ = "0.1.0"
