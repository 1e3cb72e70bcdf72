"""TLP-level transfer cost model for the filter, compaction and zero-copy engines.

Costs are in abstract time units where one saturated TLP takes ``rtt``.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, fields

import numpy as np

from .graph import CsrGraph
from .partition import PartitionTable


@dataclass(frozen=True)
class CostModelConfig:
    d1: int = 4                 # bytes per edge entry as read by the algorithm
    d2: int = 4                 # bytes per compacted index entry
    m: int = 128                # bytes per memory request
    mr: int = 256               # outstanding requests per TLP
    rtt: float = 1.0
    gamma: float = 0.625
    alpha: float = 0.8
    beta: float = 0.4
    k: int = 4
    compaction_throughput: float | None = None   # bytes per time unit, default 8 TLPs
    kernel_throughput: float | None = None       # edges per time unit, default 4 TLPs of ids

    def __post_init__(self):
        problems = []
        if self.d1 <= 0 or self.d2 < 0:
            problems.append("d1 must be > 0 and d2 >= 0")
        if self.m <= 0 or self.mr <= 0:
            problems.append("m and mr must be > 0")
        if self.rtt <= 0:
            problems.append("rtt must be > 0")
        if not 0 < self.gamma <= 1:
            problems.append("gamma must lie in (0, 1]")
        if not 0 < self.alpha < 1 or not 0 < self.beta < 1:
            problems.append("alpha and beta must lie in (0, 1)")
        if self.k < 1:
            problems.append("k must be >= 1")
        if problems:
            raise ValueError("; ".join(problems))
        if self.compaction_throughput is None:
            object.__setattr__(self, "compaction_throughput", 8.0 * self.m * self.mr / self.rtt)
        if self.kernel_throughput is None:
            object.__setattr__(self, "kernel_throughput", 4.0 * self.m * self.mr / 4 / self.rtt)
        if self.compaction_throughput <= 0 or self.kernel_throughput <= 0:
            raise ValueError("throughputs must be > 0")

    @property
    def tlp_bytes(self) -> int:
        return self.m * self.mr

    def replace(self, **changes) -> "CostModelConfig":
        return dataclasses.replace(self, **changes)


_INT_FIELDS = {"d1", "d2", "m", "mr", "k"}


def load_config(path, **overrides) -> CostModelConfig:
    """Read ``key = value`` lines into a CostModelConfig.  Unknown keys are errors."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path) as fh:
        parser.read_string("[cost]\n" + fh.read())
    known = {f.name for f in fields(CostModelConfig)}
    values = {}
    for key, raw in parser["cost"].items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        values[key] = int(raw) if key in _INT_FIELDS else float(raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return CostModelConfig(**values)


def dump_config(cfg: CostModelConfig) -> str:
    return "".join(f"{f.name} = {getattr(cfg, f.name)}\n" for f in fields(cfg))


@dataclass(frozen=True)
class PartitionActivity:
    partition: int
    active_vertices: int
    active_edges: int
    zc_requests: int
    total_edges: int


def request_counts(g: CsrGraph, vertices, cfg: CostModelConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-vertex minimum request count ceil(D_o*d1/m) and alignment penalty am(v).

    The penalty is 1 when the neighbor byte span touches one more aligned
    m-byte line than the minimum count.
    """
    vertices = np.asarray(vertices, dtype=np.int64)
    start = g.offsets[vertices] * cfg.d1
    nbytes = (g.offsets[vertices + 1] - g.offsets[vertices]) * cfg.d1
    base = -(-nbytes // cfg.m)
    lines = np.where(nbytes > 0, (start + nbytes - 1) // cfg.m - start // cfg.m + 1, 0)
    return base, lines - base


def alignment_penalty(g: CsrGraph, v: int, cfg: CostModelConfig) -> int:
    return int(request_counts(g, [v], cfg)[1][0])


def tlp_count(nbytes, cfg: CostModelConfig) -> int:
    """One ceiling over bytes/m/MR, as in the filter and compaction costs."""
    return -(-int(nbytes) // cfg.tlp_bytes)


def cost_filter(p: PartitionActivity, cfg: CostModelConfig) -> float:
    return tlp_count(p.total_edges * cfg.d1, cfg) * cfg.rtt


def compaction_bytes(p: PartitionActivity, cfg: CostModelConfig) -> int:
    return p.active_edges * cfg.d1 + p.active_vertices * cfg.d2


def cost_compaction(p: PartitionActivity, cfg: CostModelConfig, include_cpu: bool = False) -> float:
    nbytes = compaction_bytes(p, cfg)
    t = tlp_count(nbytes, cfg) * cfg.rtt
    if include_cpu:
        t += nbytes / cfg.compaction_throughput
    return t


def rtt_zero_copy(p: PartitionActivity, cfg: CostModelConfig) -> float:
    ratio = p.active_edges / p.total_edges if p.total_edges else 0.0
    return (cfg.gamma + (1.0 - cfg.gamma) * ratio) * cfg.rtt


def cost_zero_copy(p: PartitionActivity, cfg: CostModelConfig) -> float:
    return math.ceil(p.zc_requests / cfg.mr) * rtt_zero_copy(p, cfg)


def compute_activity(g: CsrGraph, table: PartitionTable, active: np.ndarray,
                     cfg: CostModelConfig) -> list[PartitionActivity]:
    """Exact per-partition aggregates of the active vertex mask."""
    n_parts = len(table)
    verts = np.flatnonzero(active)
    owner = np.searchsorted(table.starts, verts, side="right") - 1
    deg = g.offsets[verts + 1] - g.offsets[verts]
    base, am = request_counts(g, verts, cfg)
    nv = np.bincount(owner, minlength=n_parts)
    ne = np.bincount(owner, weights=deg, minlength=n_parts).astype(np.int64)
    nreq = np.bincount(owner, weights=base + am, minlength=n_parts).astype(np.int64)
    return [
        PartitionActivity(i, int(nv[i]), int(ne[i]), int(nreq[i]), int(table.edge_counts[i]))
        for i in range(n_parts)
    ]
