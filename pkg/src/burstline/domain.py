"""Domain geometry: the 2D spectral element grid and its column partitioning.

The simulated application discretizes a rectangular region into
``nx * ny`` elements of polynomial order ``px, py``. Work migrates to the
cloud in whole element columns: the cloud always takes a contiguous block
of the rightmost columns, so the two sides exchange a single vertical
boundary per timestep.
"""

from __future__ import annotations

from dataclasses import dataclass

# Per-timestep halo exchange payload between the two sides, in bytes.
DEFAULT_SYNC_PAYLOAD_BYTES = 21 * 1024

CLUSTER_OWNER = "cluster"
CLOUD_OWNER = "cloud"


def degrees_of_freedom(nx: int, ny: int, px: int, py: int) -> int:
    """Total grid points of the spectral element mesh, shared edges counted once."""
    for name, value in (("nx", nx), ("ny", ny), ("px", px), ("py", py)):
        if value < 1:
            raise ValueError(f"{name} must be >= 1, got {value}")
    return (nx * px + 1) * (ny * py + 1)


@dataclass(frozen=True)
class DomainSpec:
    """Static description of the discretized domain and its run length."""

    nx: int
    ny: int
    px: int
    py: int
    width: float
    height: float
    timesteps: int

    def __post_init__(self):
        for name, value in (("nx", self.nx), ("ny", self.ny), ("px", self.px),
                            ("py", self.py), ("timesteps", self.timesteps)):
            if value < 1:
                raise ValueError(f"{name} must be >= 1, got {value}")
        for name, value in (("width", self.width), ("height", self.height)):
            if not (value > 0.0):
                raise ValueError(f"{name} must be positive, got {value}")

    @property
    def dof(self) -> int:
        return degrees_of_freedom(self.nx, self.ny, self.px, self.py)


@dataclass(frozen=True)
class Partition:
    """A contiguous block of element columns owned by one environment.

    ``col_start`` is inclusive, ``col_end`` exclusive.
    """

    spec: DomainSpec
    owner: str
    col_start: int
    col_end: int

    def __post_init__(self):
        if self.owner not in (CLUSTER_OWNER, CLOUD_OWNER):
            raise ValueError(f"owner must be cluster or cloud, got {self.owner!r}")
        if not (0 <= self.col_start <= self.col_end <= self.spec.nx):
            raise ValueError(
                f"column range [{self.col_start}, {self.col_end}) outside domain "
                f"of {self.spec.nx} columns"
            )

    @property
    def columns(self) -> int:
        return self.col_end - self.col_start

    @property
    def is_empty(self) -> bool:
        return self.col_start == self.col_end


def split_domain(spec: DomainSpec, gamma: int) -> tuple[Partition, Partition]:
    """Split the domain at ``gamma`` columns from the right edge.

    Returns (cluster partition, cloud partition). The cloud side gets the
    rightmost ``gamma`` columns; ``gamma`` of zero keeps everything local.
    """
    if not (0 <= gamma <= spec.nx):
        raise ValueError(f"gamma must be within [0, {spec.nx}], got {gamma}")
    boundary = spec.nx - gamma
    cluster = Partition(spec=spec, owner=CLUSTER_OWNER, col_start=0, col_end=boundary)
    cloud = Partition(spec=spec, owner=CLOUD_OWNER, col_start=boundary, col_end=spec.nx)
    return cluster, cloud


def merge_partitions(a: Partition, b: Partition) -> DomainSpec:
    """Recover the domain from two partitions that tile it exactly.

    The pair must share a spec and cover [0, nx) with no gap or overlap;
    order of arguments does not matter.
    """
    if a.spec != b.spec:
        raise ValueError("partitions reference different domain specs")
    # Order by (start, end) so an empty partition at column 0 sorts first.
    left, right = sorted((a, b), key=lambda p: (p.col_start, p.col_end))
    if left.col_start != 0 or right.col_end != a.spec.nx or left.col_end != right.col_start:
        raise ValueError(
            f"partitions [{left.col_start}, {left.col_end}) and "
            f"[{right.col_start}, {right.col_end}) do not tile [0, {a.spec.nx})"
        )
    return a.spec


@dataclass(frozen=True)
class StripeAssignment:
    """Placement of one partition's columns onto (node, core) slots."""

    partition: Partition
    stripes: dict[int, tuple[int, int]]

    def inter_node_boundary_count(self) -> int:
        """Adjacent column pairs whose owners sit on different nodes."""
        count = 0
        for column in range(self.partition.col_start, self.partition.col_end - 1):
            if self.stripes[column][0] != self.stripes[column + 1][0]:
                count += 1
        return count


def assign_stripes(partition: Partition, nodes: list[tuple[int, int]]) -> StripeAssignment:
    """Greedy contiguous placement of columns onto nodes, then onto cores.

    Columns are walked left to right. Each node receives a contiguous
    block sized by its share of the total core count, and the block is
    chunked evenly across that node's cores, so consecutive columns stay
    on one node until its share is filled. The number of cross-node
    adjacent column pairs therefore equals nodes used minus one.
    """
    if not nodes:
        raise ValueError("node list is empty")
    seen = set()
    for node_id, cores in nodes:
        if cores < 0:
            raise ValueError(f"node {node_id} has negative core count {cores}")
        if node_id in seen:
            raise ValueError(f"duplicate node id {node_id}")
        seen.add(node_id)
    total_cores = sum(cores for _, cores in nodes)
    if total_cores < 1:
        raise ValueError("node list has zero total cores")

    n_columns = partition.columns
    stripes: dict[int, tuple[int, int]] = {}
    cumulative = 0
    block_start = 0
    for node_id, cores in nodes:
        cumulative += cores
        block_end = n_columns * cumulative // total_cores
        block = block_end - block_start
        if block > 0:
            # Even chunks across this node's cores, remainder to the first cores.
            base, extra = divmod(block, cores)
            offset = block_start
            for core_index in range(cores):
                chunk = base + (1 if core_index < extra else 0)
                for column in range(offset, offset + chunk):
                    stripes[partition.col_start + column] = (node_id, core_index)
                offset += chunk
        block_start = block_end
    return StripeAssignment(partition=partition, stripes=stripes)


def boundary_message_bytes(
    a: Partition,
    b: Partition,
    payload_bytes: int = DEFAULT_SYNC_PAYLOAD_BYTES,
) -> int:
    """Bytes exchanged per timestep across the partition boundary.

    Zero when either side is empty (no boundary exists); the partitions
    must otherwise be adjacent.
    """
    if payload_bytes < 0:
        raise ValueError(f"payload bytes must be >= 0, got {payload_bytes}")
    if a.is_empty or b.is_empty:
        return 0
    if a.col_end == b.col_start or b.col_end == a.col_start:
        return payload_bytes
    raise ValueError(
        f"partitions [{a.col_start}, {a.col_end}) and [{b.col_start}, {b.col_end}) "
        "are not adjacent"
    )
