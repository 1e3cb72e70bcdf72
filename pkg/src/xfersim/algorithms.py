"""Push-based vertex programs: SSSP, BFS, CC and delta-accumulative PageRank.

Every program consumes edge streams grouped by source vertex and merges
candidate values with a commutative, associative operator (min or sum), so
the order in which task units run cannot change a synchronous iteration.
"""

from __future__ import annotations

import numpy as np

from .graph import CsrGraph

ALGORITHMS = ("sssp", "bfs", "cc", "pr")


class VertexProgram:
    name = ""
    merge = "min"
    accumulative = False
    uses_weights = False

    def __init__(self, g: CsrGraph):
        self.g = g
        self.deg = g.out_degree
        self._synchronous = True

    def initial_frontier(self) -> np.ndarray:
        raise NotImplementedError

    def begin_iteration(self, active: np.ndarray, synchronous: bool = True) -> None:
        raise NotImplementedError

    def push(self, vertices: np.ndarray, dst: np.ndarray, weights: np.ndarray | None) -> None:
        """Apply one kernel launch.

        ``dst``/``weights`` hold the out-edges of ``vertices`` concatenated
        in the same vertex order.
        """
        raise NotImplementedError

    def end_iteration(self) -> np.ndarray:
        """Return the next frontier mask."""
        raise NotImplementedError

    def watch(self, lo: int, hi: int) -> np.ndarray:
        """Snapshot used by :meth:`updated_since` for vertices ``lo..hi-1``."""
        raise NotImplementedError

    def updated_since(self, lo: int, hi: int, before: np.ndarray) -> np.ndarray:
        """Vertices in ``lo..hi-1`` worth pushing again after a local pass."""
        raise NotImplementedError

    def result(self) -> np.ndarray:
        raise NotImplementedError


class _MinProgram(VertexProgram):
    """Shared machinery for min-merge programs."""

    def __init__(self, g: CsrGraph):
        super().__init__(g)
        self.values = self._init_values()
        self._start = self.values.copy()
        self._send = None

    def _init_values(self) -> np.ndarray:
        raise NotImplementedError

    def _candidates(self, send: np.ndarray, weights) -> np.ndarray:
        raise NotImplementedError

    def begin_iteration(self, active, synchronous=True):
        self._start = self.values.copy()
        self._send = self._start if synchronous else None

    def push(self, vertices, dst, weights):
        if len(dst) == 0:
            return
        source = self._send if self._send is not None else self.values
        send = np.repeat(source[vertices], self.deg[vertices])
        np.minimum.at(self.values, dst.astype(np.int64), self._candidates(send, weights))

    def end_iteration(self):
        return self.values < self._start

    def watch(self, lo, hi):
        return self.values[lo:hi].copy()

    def updated_since(self, lo, hi, before):
        return lo + np.flatnonzero(self.values[lo:hi] < before)

    def result(self):
        return self.values


class SSSP(_MinProgram):
    name = "sssp"
    uses_weights = True

    def __init__(self, g: CsrGraph, source: int = 0):
        if not g.weighted:
            raise ValueError("SSSP needs a weighted graph")
        if not 0 <= source < g.num_vertices:
            raise ValueError(f"source {source} out of range")
        self.source = source
        super().__init__(g)

    def _init_values(self):
        dist = np.full(self.g.num_vertices, np.inf)
        dist[self.source] = 0.0
        return dist

    def initial_frontier(self):
        mask = np.zeros(self.g.num_vertices, dtype=bool)
        mask[self.source] = True
        return mask

    def _candidates(self, send, weights):
        return send + weights


class BFS(SSSP):
    name = "bfs"
    uses_weights = False

    def __init__(self, g: CsrGraph, source: int = 0):
        if not 0 <= source < g.num_vertices:
            raise ValueError(f"source {source} out of range")
        self.source = source
        _MinProgram.__init__(self, g)

    def _candidates(self, send, weights):
        return send + 1.0


class CC(_MinProgram):
    """Min-label propagation; expects a symmetric adjacency."""

    name = "cc"

    def _init_values(self):
        return np.arange(self.g.num_vertices, dtype=np.int64)

    def initial_frontier(self):
        return np.ones(self.g.num_vertices, dtype=bool)

    def _candidates(self, send, weights):
        return send


class DeltaPageRank(VertexProgram):
    """Accumulative PageRank: rank absorbs residual, residual spreads d*Δ/D_o.

    Starts from rank 0 and Δ = 1 - d everywhere; converges to the solution of
    r = (1 - d) + d * A^T D^-1 r.  A vertex is active while Δ(v) >= epsilon.
    """

    name = "pr"
    merge = "sum"
    accumulative = True

    def __init__(self, g: CsrGraph, damping: float = 0.85, epsilon: float = 1e-9):
        if not 0.0 < damping < 1.0:
            raise ValueError("damping must lie in (0, 1)")
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        super().__init__(g)
        self.damping = damping
        self.epsilon = epsilon
        self.rank = np.zeros(g.num_vertices)
        self.delta = np.full(g.num_vertices, 1.0 - damping)
        self._send = None

    def initial_frontier(self):
        return self.delta >= self.epsilon

    def begin_iteration(self, active, synchronous=True):
        self._synchronous = synchronous
        if synchronous:
            send = np.where(active, self.delta, 0.0)
            self.rank += send
            self.delta[active] = 0.0
            self._send = send
        else:
            self._send = None

    def push(self, vertices, dst, weights):
        if self._synchronous:
            send = self._send[vertices]
        else:
            send = self.delta[vertices].copy()
            self.rank[vertices] += send
            self.delta[vertices] = 0.0
        deg = self.deg[vertices]
        share = np.divide(self.damping * send, deg, out=np.zeros(len(send)), where=deg > 0)
        if len(dst):
            np.add.at(self.delta, dst.astype(np.int64), np.repeat(share, deg))

    def end_iteration(self):
        self._send = None
        return self.delta >= self.epsilon

    def watch(self, lo, hi):
        return self.delta[lo:hi].copy()

    def updated_since(self, lo, hi, before):
        d = self.delta[lo:hi]
        return lo + np.flatnonzero((d > before) & (d >= self.epsilon))

    def mass(self) -> float:
        """Σ rank + Σ Δ / (1 - d); constant across steps on dangling-free graphs."""
        return float(self.rank.sum() + self.delta.sum() / (1.0 - self.damping))

    def result(self):
        return self.rank


def make_program(algo: str, g: CsrGraph, source: int = 0, damping: float = 0.85,
                 epsilon: float = 1e-9) -> VertexProgram:
    if algo == "sssp":
        return SSSP(g, source)
    if algo == "bfs":
        return BFS(g, source)
    if algo == "cc":
        return CC(g)
    if algo == "pr":
        return DeltaPageRank(g, damping, epsilon)
    raise ValueError(f"unknown algorithm {algo!r}")
