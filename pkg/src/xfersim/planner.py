"""Per-partition engine selection and task combination."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

from .cost import (
    CostModelConfig,
    PartitionActivity,
    compaction_bytes,
    cost_compaction,
    cost_filter,
    cost_zero_copy,
    tlp_count,
)


class Engine(enum.Enum):
    FILTER = "filter"
    COMPACTION = "compaction"
    ZERO_COPY = "zerocopy"


def choose_engine(tef: float, tec: float, tiz: float, alpha: float, beta: float) -> Engine:
    if tec < alpha * tef and tec < beta * tiz:
        return Engine.COMPACTION
    if tiz < tef:
        return Engine.ZERO_COPY
    return Engine.FILTER


def select_engines(activities: list[PartitionActivity], cfg: CostModelConfig,
                   forced: Engine | None = None) -> list[Engine | None]:
    """Engine per partition; ``None`` for partitions without active edges.

    Compaction is priced on transfer only.  ``forced`` bypasses the costs.
    Costs are compared in rtt units so that rounding cannot make the
    decision depend on the value of rtt.
    """
    unit = cfg.replace(rtt=1.0)
    choices = []
    for p in activities:
        if p.active_edges == 0:
            choices.append(None)
        elif forced is not None:
            choices.append(forced)
        else:
            choices.append(choose_engine(cost_filter(p, unit), cost_compaction(p, unit),
                                         cost_zero_copy(p, unit), cfg.alpha, cfg.beta))
    return choices


@dataclass
class TaskUnit:
    engine: Engine
    partitions: list[int]
    active_vertices: int = 0
    active_edges: int = 0
    total_edges: int = 0
    zc_requests: int = 0
    bytes: int = 0
    tlps: int = 0
    transfer_cost: float = 0.0
    cpu_cost: float = 0.0
    score: float = 0.0

    def to_json(self) -> dict:
        return {
            "engine": self.engine.value,
            "partitions": list(self.partitions),
            "active_vertices": self.active_vertices,
            "active_edges": self.active_edges,
            "bytes": self.bytes,
            "tlps": self.tlps,
            "transfer_cost": self.transfer_cost,
            "cpu_cost": self.cpu_cost,
            "score": self.score,
        }


@dataclass
class TransferPlan:
    filter_tasks: list[TaskUnit] = field(default_factory=list)
    compaction_task: TaskUnit | None = None
    zero_copy_task: TaskUnit | None = None
    choices: list[Engine | None] = field(default_factory=list)

    def units(self) -> list[TaskUnit]:
        """Dispatch order: filter units, then zero-copy, then compaction."""
        out = list(self.filter_tasks)
        if self.zero_copy_task is not None:
            out.append(self.zero_copy_task)
        if self.compaction_task is not None:
            out.append(self.compaction_task)
        return out

    @property
    def empty(self) -> bool:
        return not self.units()

    def count(self, engine: Engine) -> int:
        return sum(1 for c in self.choices if c is engine)

    @property
    def selection_bytes(self) -> int:
        return len(self.choices)

    def to_json(self, iteration: int | None = None) -> str:
        doc = {
            "iteration": iteration,
            "choices": [c.value if c else None for c in self.choices],
            "units": [u.to_json() for u in self.units()],
        }
        return json.dumps(doc, sort_keys=True)


def _finish(unit: TaskUnit, acts: list[PartitionActivity], cfg: CostModelConfig) -> TaskUnit:
    unit.active_vertices = sum(acts[i].active_vertices for i in unit.partitions)
    unit.active_edges = sum(acts[i].active_edges for i in unit.partitions)
    unit.total_edges = sum(acts[i].total_edges for i in unit.partitions)
    unit.zc_requests = sum(acts[i].zc_requests for i in unit.partitions)
    merged = PartitionActivity(-1, unit.active_vertices, unit.active_edges,
                               unit.zc_requests, unit.total_edges)
    if unit.engine is Engine.FILTER:
        unit.bytes = unit.total_edges * cfg.d1
        unit.tlps = tlp_count(unit.bytes, cfg)
        unit.transfer_cost = cost_filter(merged, cfg)
    elif unit.engine is Engine.COMPACTION:
        unit.bytes = compaction_bytes(merged, cfg)
        unit.tlps = tlp_count(unit.bytes, cfg)
        unit.transfer_cost = cost_compaction(merged, cfg)
        unit.cpu_cost = unit.bytes / cfg.compaction_throughput
    else:
        unit.bytes = unit.zc_requests * cfg.m
        unit.tlps = math.ceil(unit.zc_requests / cfg.mr)
        unit.transfer_cost = cost_zero_copy(merged, cfg)
    return unit


def build_plan(choices: list[Engine | None], activities: list[PartitionActivity],
               cfg: CostModelConfig) -> TransferPlan:
    """Combine partitions into task units by a single scan in partition order.

    Consecutive filter partitions share a unit of at most ``k``; any other
    choice (including an inactive partition) ends the current run.  All
    compaction partitions form one unit, all zero-copy partitions another.
    """
    plan = TransferPlan(choices=list(choices))
    run: list[int] = []
    comp: list[int] = []
    zc: list[int] = []

    def close():
        if run:
            plan.filter_tasks.append(TaskUnit(Engine.FILTER, list(run)))
            run.clear()

    for i, c in enumerate(choices):
        if c is Engine.FILTER:
            if len(run) == cfg.k:
                close()
            run.append(i)
            continue
        close()
        if c is Engine.COMPACTION:
            comp.append(i)
        elif c is Engine.ZERO_COPY:
            zc.append(i)
    close()
    if comp:
        plan.compaction_task = TaskUnit(Engine.COMPACTION, comp)
    if zc:
        plan.zero_copy_task = TaskUnit(Engine.ZERO_COPY, zc)
    for unit in plan.units():
        _finish(unit, activities, cfg)
    return plan

