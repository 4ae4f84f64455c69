"""Scenario definition and its on-disk TOML format.

A scenario bundles everything one simulated run needs: the domain, the
two environments (on-premise cluster and cloud pool), the fitted
performance models, overhead parameters, the deadline, perturbation
events, and the burst policy. Parsing is strict: unknown sections or
keys are rejected so a typo cannot silently change an experiment.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .domain import DEFAULT_SYNC_PAYLOAD_BYTES, DomainSpec
from .errors import ScenarioError
from .monitor import DEFAULT_WARMUP_STEPS, DEFAULT_WINDOW
from .perfmodel import LogLawModel, SplitModel


@dataclass
class NodeState:
    node_id: int
    cores: int
    up: bool

    def __post_init__(self):
        if self.node_id < 0:
            raise ValueError(f"node id must be >= 0, got {self.node_id}")
        if self.cores < 0:
            raise ValueError(f"node core count must be >= 0, got {self.cores}")


@dataclass
class EnvironmentState:
    """One execution environment and its live condition.

    Mutable on purpose: the simulator flips nodes up and down and changes
    the contention factor as events fire. Scenarios hold the initial
    state; runs work on copies.
    """

    label: str
    nodes: list[NodeState]
    model: LogLawModel
    contention_factor: float = 1.0
    hardware: dict[str, float | int | str] = field(default_factory=dict)

    def __post_init__(self):
        if self.contention_factor < 1.0:
            raise ValueError(
                f"contention factor must be >= 1, got {self.contention_factor}"
            )

    @property
    def available_cores(self) -> int:
        return sum(node.cores for node in self.nodes if node.up)


@dataclass(frozen=True)
class NodeDown:
    at_step: int
    node_id: int


@dataclass(frozen=True)
class NodeUp:
    at_step: int
    node_id: int


@dataclass(frozen=True)
class Contention:
    at_step: int
    factor: float


@dataclass(frozen=True)
class DeadlineChange:
    at_step: int
    deadline_seconds: float


Event = NodeDown | NodeUp | Contention | DeadlineChange


@dataclass(frozen=True)
class OverheadParams:
    """Cost parameters for checkpointing, migration and provisioning."""

    checkpoint_bytes: int
    disk_rate_bytes_per_s: float
    network_bandwidth_bits_per_s: float
    provisioning_seconds: float
    sync_payload_bytes: int = DEFAULT_SYNC_PAYLOAD_BYTES

    def __post_init__(self):
        if self.checkpoint_bytes < 0:
            raise ValueError(f"checkpoint bytes must be >= 0, got {self.checkpoint_bytes}")
        if not (self.disk_rate_bytes_per_s > 0.0):
            raise ValueError(f"disk rate must be positive, got {self.disk_rate_bytes_per_s}")
        if not (self.network_bandwidth_bits_per_s > 0.0):
            raise ValueError(
                f"network bandwidth must be positive, got {self.network_bandwidth_bits_per_s}"
            )
        if self.provisioning_seconds < 0.0:
            raise ValueError(
                f"provisioning seconds must be >= 0, got {self.provisioning_seconds}"
            )
        if self.sync_payload_bytes < 0:
            raise ValueError(
                f"sync payload bytes must be >= 0, got {self.sync_payload_bytes}"
            )


@dataclass(frozen=True)
class PolicyParams:
    """Burst policy knobs for one run."""

    burst_enabled: bool = True
    reburst: bool = False
    window: int = DEFAULT_WINDOW
    warmup_steps: int = DEFAULT_WARMUP_STEPS
    slack_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.warmup_steps < 0:
            raise ValueError(f"warmup steps must be >= 0, got {self.warmup_steps}")
        if self.slack_fraction < 0.0:
            raise ValueError(f"slack fraction must be >= 0, got {self.slack_fraction}")


@dataclass(frozen=True)
class Scenario:
    """Complete input of one simulated run."""

    domain: DomainSpec
    cluster: EnvironmentState
    cloud: EnvironmentState
    split_model: SplitModel
    overheads: OverheadParams
    deadline_seconds: float
    cloud_max_cores: int
    events: tuple[Event, ...] = ()
    policy: PolicyParams = PolicyParams()

    def __post_init__(self):
        if not (self.deadline_seconds > 0.0) or not math.isfinite(self.deadline_seconds):
            raise ValueError(f"deadline must be positive, got {self.deadline_seconds}")
        if self.cluster.label != "cluster" or self.cloud.label != "cloud":
            raise ValueError("scenario needs exactly one cluster and one cloud environment")
        if self.cloud_max_cores < 1:
            raise ValueError(f"cloud max cores must be >= 1, got {self.cloud_max_cores}")
        cluster_ids = {node.node_id for node in self.cluster.nodes}
        for event in self.events:
            if not (0 <= event.at_step < self.domain.timesteps):
                raise ValueError(
                    f"event at step {event.at_step} outside run of "
                    f"{self.domain.timesteps} steps"
                )
            if isinstance(event, (NodeDown, NodeUp)) and event.node_id not in cluster_ids:
                raise ValueError(
                    f"event references unknown cluster node {event.node_id}"
                )
            if isinstance(event, Contention) and event.factor < 1.0:
                raise ValueError(f"contention factor must be >= 1, got {event.factor}")
            if isinstance(event, DeadlineChange) and not (event.deadline_seconds > 0.0):
                raise ValueError(
                    f"deadline change must be positive, got {event.deadline_seconds}"
                )

    def with_seed(self, seed: int) -> Scenario:
        return replace(self, policy=replace(self.policy, seed=seed))


# --- TOML parsing ----------------------------------------------------------

_EVENT_KINDS = ("node_down", "node_up", "contention", "deadline_change")

_HARDWARE_KEYS = ("processor_ghz", "cache_kb", "memory_kb", "network")


class _Section:
    """One TOML table with strict key accounting."""

    def __init__(self, name: str, data: dict):
        self.name = name
        self.data = data
        self.taken: set[str] = set()

    def take(self, key: str, kinds: tuple[type, ...], required: bool = True, default=None):
        self.taken.add(key)
        if key not in self.data:
            if required:
                raise ScenarioError(f"[{self.name}] is missing required key {key!r}")
            return default
        value = self.data[key]
        # bool is an int subclass; reject it where a number is expected.
        if isinstance(value, bool) and bool not in kinds:
            raise ScenarioError(f"[{self.name}] key {key!r} has wrong type bool")
        if not isinstance(value, kinds):
            names = "/".join(k.__name__ for k in kinds)
            raise ScenarioError(
                f"[{self.name}] key {key!r} must be {names}, got {type(value).__name__}"
            )
        return value

    def finish(self):
        unknown = set(self.data) - self.taken
        if unknown:
            raise ScenarioError(
                f"[{self.name}] has unknown key(s): {', '.join(sorted(unknown))}"
            )


def _take_float(section: _Section, key: str, required: bool = True, default=None):
    value = section.take(key, (int, float), required=required, default=default)
    return float(value) if value is not None else None


def _parse_environment(section: _Section, label: str, model: LogLawModel,
                       nodes_up: bool) -> EnvironmentState:
    node_count = section.take("nodes", (int,))
    cores_per_node = section.take("cores_per_node", (int,))
    if node_count < 1:
        raise ScenarioError(f"[{section.name}] needs at least one node")
    if cores_per_node < 1:
        raise ScenarioError(f"[{section.name}] needs at least one core per node")
    hardware = {}
    for key in _HARDWARE_KEYS:
        value = section.take(key, (int, float, str), required=False)
        if value is not None:
            hardware[key] = value
    nodes = [NodeState(node_id=i, cores=cores_per_node, up=nodes_up)
             for i in range(node_count)]
    return EnvironmentState(label=label, nodes=nodes, model=model, hardware=hardware)


def _parse_event(index: int, data: dict) -> Event:
    section = _Section(f"event #{index}", data)
    at_step = section.take("at_step", (int,))
    kind = section.take("kind", (str,))
    if kind not in _EVENT_KINDS:
        raise ScenarioError(
            f"[event #{index}] unknown kind {kind!r}, expected one of {', '.join(_EVENT_KINDS)}"
        )
    if kind == "node_down":
        event: Event = NodeDown(at_step=at_step, node_id=section.take("node", (int,)))
    elif kind == "node_up":
        event = NodeUp(at_step=at_step, node_id=section.take("node", (int,)))
    elif kind == "contention":
        event = Contention(at_step=at_step, factor=_take_float(section, "factor"))
    else:
        event = DeadlineChange(
            at_step=at_step, deadline_seconds=_take_float(section, "seconds")
        )
    section.finish()
    return event


def parse_scenario(text: str) -> Scenario:
    """Parse a scenario from TOML text, rejecting unknown sections and keys."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"scenario is not valid TOML: {exc}") from None

    known_sections = {"domain", "cluster", "cloud", "models", "overheads",
                      "deadline", "policy", "event"}
    unknown = set(raw) - known_sections
    if unknown:
        raise ScenarioError(f"unknown section(s): {', '.join(sorted(unknown))}")
    for name in ("domain", "cluster", "cloud", "models", "overheads", "deadline"):
        if name not in raw:
            raise ScenarioError(f"missing required section [{name}]")
        if not isinstance(raw[name], dict):
            raise ScenarioError(f"[{name}] must be a table")

    dom = _Section("domain", raw["domain"])
    domain = DomainSpec(
        nx=dom.take("nx", (int,)),
        ny=dom.take("ny", (int,)),
        px=dom.take("px", (int,)),
        py=dom.take("py", (int,)),
        width=_take_float(dom, "width"),
        height=_take_float(dom, "height"),
        timesteps=dom.take("timesteps", (int,)),
    )
    dom.finish()

    models = _Section("models", raw["models"])
    cluster_law = LogLawModel(
        slope=_take_float(models, "cluster_slope"),
        intercept=_take_float(models, "cluster_intercept"),
        label="cluster",
    )
    cloud_law = LogLawModel(
        slope=_take_float(models, "cloud_slope"),
        intercept=_take_float(models, "cloud_intercept"),
        label="cloud",
    )
    split = SplitModel(
        slope=_take_float(models, "split_slope"),
        intercept=_take_float(models, "split_intercept"),
    )
    models.finish()

    cluster_section = _Section("cluster", raw["cluster"])
    cluster = _parse_environment(cluster_section, "cluster", cluster_law, nodes_up=True)
    cluster_section.finish()

    # Cloud nodes describe the pool that can be provisioned; nothing is
    # up until a burst brings capacity online.
    cloud_section = _Section("cloud", raw["cloud"])
    cloud = _parse_environment(cloud_section, "cloud", cloud_law, nodes_up=False)
    pool_cores = sum(node.cores for node in cloud.nodes)
    max_cores = cloud_section.take("max_cores", (int,), required=False, default=pool_cores)
    cloud_section.finish()
    if max_cores < 1:
        raise ScenarioError("[cloud] max_cores must be >= 1")

    over = _Section("overheads", raw["overheads"])
    overheads = OverheadParams(
        checkpoint_bytes=over.take("checkpoint_bytes", (int,)),
        disk_rate_bytes_per_s=_take_float(over, "disk_rate_bytes_per_s"),
        network_bandwidth_bits_per_s=_take_float(over, "network_bandwidth_bits_per_s"),
        provisioning_seconds=_take_float(over, "provisioning_seconds"),
        sync_payload_bytes=over.take(
            "sync_payload_bytes", (int,), required=False,
            default=DEFAULT_SYNC_PAYLOAD_BYTES,
        ),
    )
    over.finish()

    deadline_section = _Section("deadline", raw["deadline"])
    deadline_seconds = _take_float(deadline_section, "seconds")
    deadline_section.finish()

    policy = PolicyParams()
    if "policy" in raw:
        if not isinstance(raw["policy"], dict):
            raise ScenarioError("[policy] must be a table")
        pol = _Section("policy", raw["policy"])
        policy = PolicyParams(
            burst_enabled=pol.take("burst_enabled", (bool,), required=False, default=True),
            reburst=pol.take("reburst", (bool,), required=False, default=False),
            window=pol.take("window", (int,), required=False, default=DEFAULT_WINDOW),
            warmup_steps=pol.take(
                "warmup_steps", (int,), required=False, default=DEFAULT_WARMUP_STEPS
            ),
            slack_fraction=_take_float(pol, "slack_fraction", required=False, default=0.0),
            seed=pol.take("seed", (int,), required=False, default=0),
        )
        pol.finish()

    events = []
    if "event" in raw:
        if not isinstance(raw["event"], list):
            raise ScenarioError("[[event]] must be an array of tables")
        for index, entry in enumerate(raw["event"]):
            if not isinstance(entry, dict):
                raise ScenarioError(f"[event #{index}] must be a table")
            events.append(_parse_event(index, entry))

    try:
        return Scenario(
            domain=domain,
            cluster=cluster,
            cloud=cloud,
            split_model=split,
            overheads=overheads,
            deadline_seconds=deadline_seconds,
            cloud_max_cores=max_cores,
            events=tuple(events),
            policy=policy,
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None


def load_scenario(path: str | os.PathLike) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return parse_scenario(handle.read())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None


# --- TOML serialization -----------------------------------------------------


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_scenario(scenario: Scenario) -> str:
    """Serialize a scenario to the TOML format ``parse_scenario`` reads."""
    lines = []

    def section(name: str, pairs: list[tuple[str, object]], array: bool = False):
        lines.append(f"[[{name}]]" if array else f"[{name}]")
        for key, value in pairs:
            if value is not None:
                lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")

    d = scenario.domain
    section("domain", [("nx", d.nx), ("ny", d.ny), ("px", d.px), ("py", d.py),
                       ("width", d.width), ("height", d.height),
                       ("timesteps", d.timesteps)])

    for env in (scenario.cluster, scenario.cloud):
        pairs: list[tuple[str, object]] = [
            ("nodes", len(env.nodes)),
            ("cores_per_node", env.nodes[0].cores if env.nodes else 0),
        ]
        if env.label == "cloud":
            pairs.append(("max_cores", scenario.cloud_max_cores))
        pairs.extend((key, env.hardware.get(key)) for key in _HARDWARE_KEYS)
        section(env.label, pairs)

    section("models", [
        ("cluster_slope", scenario.cluster.model.slope),
        ("cluster_intercept", scenario.cluster.model.intercept),
        ("cloud_slope", scenario.cloud.model.slope),
        ("cloud_intercept", scenario.cloud.model.intercept),
        ("split_slope", scenario.split_model.slope),
        ("split_intercept", scenario.split_model.intercept),
    ])

    o = scenario.overheads
    section("overheads", [
        ("checkpoint_bytes", o.checkpoint_bytes),
        ("disk_rate_bytes_per_s", o.disk_rate_bytes_per_s),
        ("network_bandwidth_bits_per_s", o.network_bandwidth_bits_per_s),
        ("provisioning_seconds", o.provisioning_seconds),
        ("sync_payload_bytes", o.sync_payload_bytes),
    ])

    section("deadline", [("seconds", scenario.deadline_seconds)])

    p = scenario.policy
    section("policy", [
        ("burst_enabled", p.burst_enabled),
        ("reburst", p.reburst),
        ("window", p.window),
        ("warmup_steps", p.warmup_steps),
        ("slack_fraction", p.slack_fraction),
        ("seed", p.seed),
    ])

    for event in scenario.events:
        if isinstance(event, NodeDown):
            pairs = [("at_step", event.at_step), ("kind", "node_down"),
                     ("node", event.node_id)]
        elif isinstance(event, NodeUp):
            pairs = [("at_step", event.at_step), ("kind", "node_up"),
                     ("node", event.node_id)]
        elif isinstance(event, Contention):
            pairs = [("at_step", event.at_step), ("kind", "contention"),
                     ("factor", event.factor)]
        else:
            pairs = [("at_step", event.at_step), ("kind", "deadline_change"),
                     ("seconds", event.deadline_seconds)]
        section("event", pairs, array=True)

    return "\n".join(lines)


def save_scenario(scenario: Scenario, path: str | os.PathLike):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(format_scenario(scenario))
