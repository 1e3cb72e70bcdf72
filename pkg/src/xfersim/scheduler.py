"""Contribution-driven ordering of filter units and the single local re-run."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algorithms import VertexProgram
from .graph import CsrGraph
from .planner import TransferPlan, TaskUnit
from .partition import PartitionTable

PRIORITY_MODES = ("none", "hub", "delta")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PriorityPolicy:
    mode: str = "none"
    delta_agg: str = "sum"
    recompute_rounds: int = 1

    def __post_init__(self):
        if self.mode not in PRIORITY_MODES:
            raise ConfigError(f"unknown priority mode {self.mode!r}")
        if self.delta_agg not in ("sum", "max"):
            raise ConfigError(f"unknown delta aggregate {self.delta_agg!r}")
        if self.recompute_rounds != 1:
            raise ConfigError("exactly one recompute round is supported")

    @property
    def asynchronous(self) -> bool:
        return self.mode != "none"

    def check(self, program: VertexProgram) -> None:
        if self.mode == "delta" and not program.accumulative:
            raise ConfigError(f"delta priority needs an accumulative algorithm, not {program.name}")


def unit_vertices(unit: TaskUnit, table: PartitionTable, active: np.ndarray) -> np.ndarray:
    """Sorted active vertex ids covered by the unit's partitions."""
    first, last = unit.partitions[0], unit.partitions[-1]
    if last - first + 1 == len(unit.partitions):
        lo = table.starts[first]
        return (np.flatnonzero(active[lo:table.ends[last]]) + lo).astype(np.int64)
    parts = [np.flatnonzero(active[table.starts[i]:table.ends[i]]) + table.starts[i]
             for i in unit.partitions]
    return np.concatenate(parts).astype(np.int64)


def unit_score(unit: TaskUnit, table: PartitionTable, active: np.ndarray,
               policy: PriorityPolicy, program: VertexProgram, hub: np.ndarray | None) -> float:
    verts = unit_vertices(unit, table, active)
    if policy.mode == "hub":
        return float(hub[verts].sum()) if len(verts) else 0.0
    if policy.mode == "delta":
        d = np.abs(program.delta[verts])
        if not len(d):
            return 0.0
        return float(d.max() if policy.delta_agg == "max" else d.sum())
    return 0.0


def prioritize(plan: TransferPlan, table: PartitionTable, active: np.ndarray,
               policy: PriorityPolicy, program: VertexProgram,
               hub: np.ndarray | None = None) -> TransferPlan:
    """Reorder filter units by descending score; ties keep the lower index first."""
    if policy.mode == "none" or not plan.filter_tasks:
        return plan
    policy.check(program)
    if policy.mode == "hub" and hub is None:
        raise ConfigError("hub priority needs hub scores")
    for unit in plan.filter_tasks:
        unit.score = unit_score(unit, table, active, policy, program, hub)
    order = sorted(range(len(plan.filter_tasks)), key=lambda i: (-plan.filter_tasks[i].score, i))
    plan.filter_tasks = [plan.filter_tasks[i] for i in order]
    return plan


def recompute_pass(g: CsrGraph, table: PartitionTable, unit: TaskUnit,
                   program: VertexProgram, before: list[np.ndarray]) -> int:
    """Push once more from vertices the unit's own pass just updated.

    The unit's partitions are already resident, so this only costs kernel
    time.  ``before`` holds :meth:`VertexProgram.watch` snapshots taken per
    partition ahead of the first pass.  Returns the edges processed.
    """
    picked = [program.updated_since(int(table.starts[i]), int(table.ends[i]), snap)
              for i, snap in zip(unit.partitions, before)]
    verts = np.concatenate(picked) if picked else np.zeros(0, dtype=np.int64)
    if not len(verts):
        return 0
    _, edge_idx = g.gather_edges(verts)
    w = g.weights[edge_idx] if program.uses_weights else None
    program.push(verts, g.neighbors[edge_idx], w)
    return len(edge_idx)
