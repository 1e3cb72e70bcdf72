"""Multi-stream execution of a transfer plan on a simulated clock.

Three exclusive resources exist: the PCIe link, the GPU and the CPU
compactor.  A task unit runs its stages in order on one stream; a stage
starts once its predecessor is done and every resource it needs is free.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .algorithms import VertexProgram
from .cost import CostModelConfig, PartitionActivity, cost_zero_copy, request_counts, tlp_count
from .graph import CsrGraph
from .partition import PartitionTable
from .planner import Engine, TaskUnit, TransferPlan
from .scheduler import PriorityPolicy, recompute_pass, unit_vertices

PCIE, GPU, CPU = "pcie", "gpu", "cpu"
RESOURCES = (PCIE, GPU, CPU)


class PlanMismatchError(RuntimeError):
    """The plan does not describe the frontier it is executed against."""


@dataclass
class Stage:
    unit: int
    stream: int
    kind: str
    resources: tuple[str, ...]
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


class SimClock:
    """Greedy list scheduler over S streams and exclusive resources."""

    def __init__(self, streams: int = 4):
        if streams < 1:
            raise ValueError("need at least one stream")
        self.now = 0.0
        self._streams = [(0.0, s) for s in range(streams)]
        heapq.heapify(self._streams)
        self.free = {r: 0.0 for r in RESOURCES}
        self.stages: list[Stage] = []

    def dispatch(self, unit: int, stages: list[tuple[str, tuple[str, ...], float]]) -> int:
        """Place one task unit's stages on the earliest available stream."""
        ready, stream = heapq.heappop(self._streams)
        t = ready
        for kind, resources, duration in stages:
            if duration <= 0:
                continue
            start = max([t] + [self.free[r] for r in resources])
            end = start + duration
            for r in resources:
                self.free[r] = end
            self.stages.append(Stage(unit, stream, kind, resources, start, end))
            t = end
        heapq.heappush(self._streams, (t, stream))
        self.now = max(self.now, t)
        return stream

    @property
    def makespan(self) -> float:
        return max((s.end for s in self.stages), default=0.0)

    def busy(self, resource: str) -> float:
        return sum(s.duration for s in self.stages if resource in s.resources)

    def intervals(self, resource: str) -> list[tuple[float, float]]:
        return sorted((s.start, s.end) for s in self.stages if resource in s.resources)


CSV_FIELDS = (
    "iteration", "active_vertices", "active_edges", "filter_partitions",
    "compaction_partitions", "zerocopy_partitions", "bytes_filter",
    "bytes_compaction_payload", "bytes_zerocopy_lines", "tlps_total",
    "cpu_compact_time", "makespan",
)


@dataclass
class IterationMetrics:
    iteration: int = 0
    active_vertices: int = 0
    active_edges: int = 0
    filter_partitions: int = 0
    compaction_partitions: int = 0
    zerocopy_partitions: int = 0
    bytes_filter: int = 0
    bytes_compaction_payload: int = 0
    bytes_zerocopy_lines: int = 0
    tlps_total: int = 0
    cpu_compact_time: float = 0.0
    makespan: float = 0.0
    # not part of the CSV
    stage_time_total: float = 0.0
    busy: dict = field(default_factory=dict)
    recompute_edges: int = 0
    stages: list = field(default_factory=list)

    @property
    def bytes_total(self) -> int:
        return self.bytes_filter + self.bytes_compaction_payload + self.bytes_zerocopy_lines

    def row(self) -> list:
        return [getattr(self, name) for name in CSV_FIELDS]


@dataclass
class UnitExecution:
    vertices: np.ndarray
    bytes: int
    tlps: int
    transfer_time: float
    cpu_time: float = 0.0
    edges: int = 0


def _push(program: VertexProgram, g: CsrGraph, vertices, dst, edge_idx):
    w = g.weights[edge_idx] if program.uses_weights else None
    program.push(vertices, dst, w)


def exec_filter_task(g: CsrGraph, table: PartitionTable, unit: TaskUnit, vertices: np.ndarray,
                     program: VertexProgram, cfg: CostModelConfig) -> UnitExecution:
    """Ship every partition of the unit whole; the kernel touches only active edges."""
    lo = int(table.starts[unit.partitions[0]])
    hi = int(table.ends[unit.partitions[-1]])
    resident = g.offsets[hi] - g.offsets[lo]
    nbytes = int(resident) * cfg.d1
    _, edge_idx = g.gather_edges(vertices)
    _push(program, g, vertices, g.neighbors[edge_idx], edge_idx)
    tlps = tlp_count(nbytes, cfg)
    return UnitExecution(vertices, nbytes, tlps, tlps * cfg.rtt, edges=len(edge_idx))


def compact(g: CsrGraph, vertices: np.ndarray, with_weights: bool):
    """Gather the active vertices' neighbor lists into fresh contiguous arrays.

    Returns ``(index, neighbors, weights)`` where ``index[j]`` is where
    vertex ``vertices[j]``'s edges start in the compacted arrays.
    """
    deg = g.offsets[vertices + 1] - g.offsets[vertices]
    index = np.zeros(len(vertices), dtype=np.int64)
    if len(vertices) > 1:
        np.cumsum(deg[:-1], out=index[1:])
    _, edge_idx = g.gather_edges(vertices)
    nbrs = g.neighbors[edge_idx].copy()
    w = g.weights[edge_idx].copy() if with_weights else None
    return index, nbrs, w


def exec_compaction_task(g: CsrGraph, unit: TaskUnit, vertices: np.ndarray,
                         program: VertexProgram, cfg: CostModelConfig) -> UnitExecution:
    index, nbrs, w = compact(g, vertices, program.uses_weights)
    nbytes = len(nbrs) * cfg.d1 + len(index) * cfg.d2
    program.push(vertices, nbrs, w)
    tlps = tlp_count(nbytes, cfg)
    return UnitExecution(vertices, nbytes, tlps, tlps * cfg.rtt,
                         cpu_time=nbytes / cfg.compaction_throughput, edges=len(nbrs))


def exec_zero_copy_task(g: CsrGraph, unit: TaskUnit, vertices: np.ndarray,
                        program: VertexProgram, cfg: CostModelConfig) -> UnitExecution:
    """Read each active vertex's neighbors straight from host memory in m-byte lines."""
    base, am = request_counts(g, vertices, cfg)
    requests = int(base.sum() + am.sum())
    _, edge_idx = g.gather_edges(vertices)
    _push(program, g, vertices, g.neighbors[edge_idx], edge_idx)
    merged = PartitionActivity(-1, len(vertices), len(edge_idx), requests, unit.total_edges)
    return UnitExecution(vertices, requests * cfg.m, math.ceil(requests / cfg.mr),
                         cost_zero_copy(merged, cfg), edges=len(edge_idx))


def run_iteration(g: CsrGraph, table: PartitionTable, plan: TransferPlan, program: VertexProgram,
                  active: np.ndarray, cfg: CostModelConfig,
                  policy: PriorityPolicy = PriorityPolicy(), streams: int = 4,
                  iteration: int = 0) -> tuple[np.ndarray, IterationMetrics]:
    """Execute every task unit of ``plan`` and return (next frontier, metrics).

    Vertex updates are applied in dispatch order.  Without a priority policy
    each iteration is synchronous: kernels read values frozen at the start.
    """
    clock = SimClock(streams)
    met = IterationMetrics(iteration=iteration,
                           active_vertices=int(active.sum()),
                           active_edges=int(g.out_degree[active].sum()))
    met.filter_partitions = plan.count(Engine.FILTER)
    met.compaction_partitions = plan.count(Engine.COMPACTION)
    met.zerocopy_partitions = plan.count(Engine.ZERO_COPY)

    program.begin_iteration(active, synchronous=not policy.asynchronous)
    covered = np.zeros(len(active), dtype=bool)
    for idx, unit in enumerate(plan.units()):
        vertices = unit_vertices(unit, table, active)
        if len(vertices) != unit.active_vertices:
            raise PlanMismatchError(
                f"unit {idx} expects {unit.active_vertices} active vertices, found {len(vertices)}")
        covered[vertices] = True
        recompute = policy.asynchronous and unit.engine is Engine.FILTER
        if recompute:
            before = [program.watch(int(table.starts[i]), int(table.ends[i]))
                      for i in unit.partitions]
        if unit.engine is Engine.FILTER:
            ex = exec_filter_task(g, table, unit, vertices, program, cfg)
            met.bytes_filter += ex.bytes
        elif unit.engine is Engine.COMPACTION:
            ex = exec_compaction_task(g, unit, vertices, program, cfg)
            met.bytes_compaction_payload += ex.bytes
            met.cpu_compact_time += ex.cpu_time
        else:
            ex = exec_zero_copy_task(g, unit, vertices, program, cfg)
            met.bytes_zerocopy_lines += ex.bytes
        met.tlps_total += ex.tlps
        edges = ex.edges
        if recompute:
            extra = recompute_pass(g, table, unit, program, before)
            met.recompute_edges += extra
            edges += extra
        kernel = edges / cfg.kernel_throughput
        if unit.engine is Engine.FILTER:
            stages = [("transfer", (PCIE,), ex.transfer_time), ("kernel", (GPU,), kernel)]
        elif unit.engine is Engine.COMPACTION:
            stages = [("compact", (CPU,), ex.cpu_time), ("transfer", (PCIE,), ex.transfer_time),
                      ("kernel", (GPU,), kernel)]
        else:
            stages = [("zerocopy", (PCIE, GPU), max(ex.transfer_time, kernel))]
        clock.dispatch(idx, stages)
    # active vertices without out-edges have nothing to fetch; vertex state is
    # device resident, so they are settled in place at no transfer cost
    leftover = np.flatnonzero(active & ~covered)
    if len(leftover):
        if g.out_degree[leftover].any():
            raise PlanMismatchError("plan misses active vertices that have out-edges")
        program.push(leftover, np.zeros(0, dtype=np.int64), None)

    nxt = program.end_iteration()
    met.makespan = clock.makespan
    met.stage_time_total = sum(s.duration for s in clock.stages)
    met.busy = {r: clock.busy(r) for r in RESOURCES}
    met.stages = clock.stages
    return nxt, met


def metrics_field_names() -> list[str]:
    return [f.name for f in fields(IterationMetrics) if f.name in CSV_FIELDS]
