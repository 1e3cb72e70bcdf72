"""Hub sorting and edge-balanced contiguous chunking."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import CsrGraph, DegreeStats, compute_degree_stats

DEFAULT_HUB_FRACTION = 0.08
DEFAULT_PARTITION_BYTES = 32 * 1024 * 1024


def hub_scores(stats: DegreeStats) -> np.ndarray:
    """H(v) = D_o(v) * D_i(v) / (D_omax * D_imax), in [0, 1]."""
    denom = stats.d_omax * stats.d_imax
    if denom == 0:
        return np.zeros(len(stats.out_degree))
    return stats.out_degree * stats.in_degree / denom


def hub_order(stats: DegreeStats, hub_fraction: float) -> np.ndarray:
    """Old vertex ids in their new order: top hubs first, rest in natural order."""
    if not 0.0 <= hub_fraction <= 1.0:
        raise ValueError(f"hub_fraction must lie in [0, 1], got {hub_fraction}")
    n = len(stats.out_degree)
    h = min(n, math.ceil(hub_fraction * n))
    ids = np.arange(n, dtype=np.int64)
    if h == 0:
        return ids
    # integer product ranks identically to H(v) and avoids float ties
    key = stats.out_degree.astype(np.int64) * stats.in_degree.astype(np.int64)
    ranked = np.lexsort((ids, -key))
    hubs = ranked[:h]
    rest = np.ones(n, dtype=bool)
    rest[hubs] = False
    return np.concatenate([hubs, ids[rest]])


def relabel(g: CsrGraph, perm: np.ndarray) -> CsrGraph:
    """Apply ``perm`` (old id -> new id), keeping each neighbor list's order."""
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm), dtype=perm.dtype)
    deg = g.out_degree[inv]
    offsets = np.zeros(g.num_vertices + 1, dtype=np.int64)
    np.cumsum(deg, out=offsets[1:])
    _, edge_idx = g.gather_edges(inv)
    neighbors = perm[g.neighbors[edge_idx].astype(np.int64)]
    weights = g.weights[edge_idx] if g.weighted else None
    return CsrGraph(offsets, neighbors, weights, id_bytes=g.id_bytes)


def hub_sort(g: CsrGraph, stats: DegreeStats | None = None,
             hub_fraction: float = DEFAULT_HUB_FRACTION) -> tuple[CsrGraph, np.ndarray]:
    """Gather the highest-scoring hub vertices at the front of the id space.

    Returns ``(relabeled_graph, perm)`` with ``perm[old_id] == new_id``.
    Hubs are placed by descending score, ties by ascending original id.
    """
    if stats is None:
        stats = compute_degree_stats(g)
    order = hub_order(stats, hub_fraction)
    perm = np.empty(g.num_vertices, dtype=np.int64)
    perm[order] = np.arange(g.num_vertices, dtype=np.int64)
    if np.array_equal(order, np.arange(g.num_vertices)):
        return g, perm
    return relabel(g, perm), perm


@dataclass(frozen=True)
class PartitionTable:
    starts: np.ndarray          # first vertex of each partition
    ends: np.ndarray            # one past the last vertex
    edge_counts: np.ndarray
    byte_counts: np.ndarray
    target_bytes: int

    def __len__(self):
        return len(self.starts)

    @property
    def ranges(self) -> list[tuple[int, int]]:
        return [(int(s), int(e)) for s, e in zip(self.starts, self.ends)]

    def vertex_partition(self, num_vertices: int) -> np.ndarray:
        """Partition index of every vertex."""
        owner = np.zeros(num_vertices, dtype=np.int64)
        if len(self) > 1:
            owner[self.starts[1:]] = 1
            np.cumsum(owner, out=owner)
        return owner


def partition_chunked(g: CsrGraph, target_bytes: int = DEFAULT_PARTITION_BYTES) -> PartitionTable:
    """Greedy sweep in id order closing a chunk before it would exceed ``target_bytes``.

    A vertex whose own edges exceed the target gets a partition to itself.
    """
    if target_bytes <= 0:
        raise ValueError("target_bytes must be positive")
    n = g.num_vertices
    eb = g.edge_bytes
    cum = g.offsets * eb  # byte position where each vertex's edges start
    starts = []
    s = 0
    while s < n:
        # largest e with cum[e] - cum[s] <= target
        e = int(np.searchsorted(cum, cum[s] + target_bytes, side="right")) - 1
        e = min(max(e, s + 1), n)
        starts.append(s)
        s = e
    starts = np.array(starts, dtype=np.int64)
    ends = np.append(starts[1:], n).astype(np.int64)
    edge_counts = g.offsets[ends] - g.offsets[starts]
    return PartitionTable(starts, ends, edge_counts, edge_counts * eb, int(target_bytes))
