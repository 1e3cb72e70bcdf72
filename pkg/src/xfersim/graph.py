"""CSR graph storage, edge-list ingestion and the binary on-disk format."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"HYTG"
FORMAT_VERSION = 1
FLAG_WEIGHTED = 1
FLAG_WIDE_IDS = 2
HEADER = struct.Struct("<4sIIQQ")

WEIGHT_BYTES = 4


class GraphFormatError(ValueError):
    """Raised for malformed edge lists or binary CSR files."""


@dataclass(frozen=True, eq=False)
class CsrGraph:
    offsets: np.ndarray
    neighbors: np.ndarray
    weights: np.ndarray | None = None
    id_bytes: int = 4

    def __post_init__(self):
        offsets = np.ascontiguousarray(self.offsets, dtype=np.int64)
        id_dtype = np.uint32 if self.id_bytes == 4 else np.uint64
        if self.id_bytes not in (4, 8):
            raise ValueError(f"id width must be 4 or 8 bytes, got {self.id_bytes}")
        neighbors = np.ascontiguousarray(self.neighbors, dtype=id_dtype)
        weights = self.weights
        if weights is not None:
            weights = np.ascontiguousarray(weights, dtype=np.uint32)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "neighbors", neighbors)
        object.__setattr__(self, "weights", weights)
        for arr in (offsets, neighbors, weights):
            if arr is not None:
                arr.setflags(write=False)
        self._check()

    def _check(self):
        off = self.offsets
        if off.ndim != 1 or len(off) < 1:
            raise ValueError("offsets must be a 1-d array of length num_vertices+1")
        if off[0] != 0 or off[-1] != len(self.neighbors):
            raise ValueError("offsets must start at 0 and end at num_edges")
        if len(off) > 1 and np.any(np.diff(off) < 0):
            raise ValueError("offsets must be non-decreasing")
        if len(self.neighbors) and int(self.neighbors.max()) >= self.num_vertices:
            raise ValueError("neighbor id out of range")
        if self.weights is not None and len(self.weights) != len(self.neighbors):
            raise ValueError("weights length must equal num_edges")

    @property
    def num_vertices(self) -> int:
        return len(self.offsets) - 1

    @property
    def num_edges(self) -> int:
        return len(self.neighbors)

    @property
    def weighted(self) -> bool:
        return self.weights is not None

    @property
    def out_degree(self) -> np.ndarray:
        return np.diff(self.offsets)

    @property
    def edge_bytes(self) -> int:
        """Stored bytes per edge entry: neighbor id plus weight when present."""
        return self.id_bytes + (WEIGHT_BYTES if self.weighted else 0)

    def neighbors_of(self, v: int) -> np.ndarray:
        return self.neighbors[self.offsets[v]:self.offsets[v + 1]]

    def edge_sources(self) -> np.ndarray:
        return np.repeat(np.arange(self.num_vertices, dtype=np.int64), self.out_degree)

    def gather_edges(self, vertices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (source per edge, edge index) for the out-edges of ``vertices``.

        Edges come out grouped by vertex in the order given, each group in CSR order.
        """
        vertices = np.asarray(vertices, dtype=np.int64)
        starts = self.offsets[vertices]
        lens = self.offsets[vertices + 1] - starts
        total = int(lens.sum())
        if total == 0:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        shift = np.repeat(starts - (np.cumsum(lens) - lens), lens)
        return np.repeat(vertices, lens), shift + np.arange(total, dtype=np.int64)

    def same_as(self, other: "CsrGraph") -> bool:
        if self.id_bytes != other.id_bytes or self.weighted != other.weighted:
            return False
        if not (np.array_equal(self.offsets, other.offsets)
                and np.array_equal(self.neighbors, other.neighbors)):
            return False
        return not self.weighted or np.array_equal(self.weights, other.weights)


@dataclass(frozen=True)
class DegreeStats:
    in_degree: np.ndarray
    out_degree: np.ndarray
    d_imax: int
    d_omax: int


def from_edges(src, dst, num_vertices: int, weights=None, id_bytes: int = 4) -> CsrGraph:
    """Build a CSR graph from parallel edge arrays.

    The sort is stable, so per-vertex neighbor order follows input order.
    Duplicate edges and self-loops are kept.
    """
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if src.shape != dst.shape:
        raise ValueError("src and dst must have equal length")
    if len(src) and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= num_vertices):
        raise ValueError("edge endpoint out of range")
    order = np.argsort(src, kind="stable")
    counts = np.bincount(src, minlength=num_vertices)
    offsets = np.zeros(num_vertices + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    w = None if weights is None else np.asarray(weights)[order]
    return CsrGraph(offsets, dst[order], w, id_bytes=id_bytes)


def empty_graph(id_bytes: int = 4) -> CsrGraph:
    return CsrGraph(np.zeros(1, dtype=np.int64), np.zeros(0), None, id_bytes=id_bytes)


def synthesize_weights(g: CsrGraph) -> CsrGraph:
    """Attach deterministic weights ``(src + dst) % 64 + 1`` to an unweighted graph."""
    if g.weighted:
        return g
    w = (g.edge_sources() + g.neighbors.astype(np.int64)) % 64 + 1
    return CsrGraph(g.offsets, g.neighbors, w, id_bytes=g.id_bytes)


def is_symmetric(g: CsrGraph) -> bool:
    """True when u -> v is an edge exactly as often as v -> u."""
    src = g.edge_sources()
    dst = g.neighbors.astype(np.int64)
    n = max(g.num_vertices, 1)
    fwd = np.sort(src * n + dst)
    bwd = np.sort(dst * n + src)
    return bool(np.array_equal(fwd, bwd))


def symmetrize(g: CsrGraph) -> CsrGraph:
    """Add the reverse of every edge (weights copied)."""
    src = g.edge_sources()
    dst = g.neighbors.astype(np.int64)
    w = None if g.weights is None else np.concatenate([g.weights, g.weights])
    return from_edges(np.concatenate([src, dst]), np.concatenate([dst, src]),
                      g.num_vertices, w, id_bytes=g.id_bytes)


def compute_degree_stats(g: CsrGraph) -> DegreeStats:
    out_deg = g.out_degree
    in_deg = np.bincount(g.neighbors.astype(np.int64), minlength=g.num_vertices)
    return DegreeStats(
        in_degree=in_deg,
        out_degree=out_deg,
        d_imax=int(in_deg.max()) if g.num_vertices else 0,
        d_omax=int(out_deg.max()) if g.num_vertices else 0,
    )


def parse_edge_list(lines, weighted: bool = False):
    """Parse edge-list text lines into (src, dst, weights) integer arrays.

    ``#`` lines and blank lines are skipped.  Raises GraphFormatError with the
    1-based line number on malformed input.
    """
    src, dst, wts = [], [], []
    want = 3 if weighted else 2
    for lineno, line in enumerate(lines, start=1):
        fields = line.split()
        if not fields or fields[0].startswith("#"):
            continue
        if len(fields) < want or len(fields) > 3:
            raise GraphFormatError(f"line {lineno}: expected {want} fields, got {len(fields)}")
        try:
            vals = [int(f) for f in fields]
        except ValueError:
            raise GraphFormatError(f"line {lineno}: non-integer field in {line.strip()!r}") from None
        if any(x < 0 for x in vals):
            raise GraphFormatError(f"line {lineno}: negative value")
        src.append(vals[0])
        dst.append(vals[1])
        if weighted:
            wts.append(vals[2])
    w = np.array(wts, dtype=np.int64) if weighted else None
    return np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64), w


def build_from_raw_edges(src, dst, weights=None, directed: bool = True, id_bytes: int = 4):
    """Compact sparse ids, optionally symmetrize, and build the CSR.

    Returns ``(graph, id_map)`` where ``id_map[new_id]`` is the original id.
    """
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    id_map = np.unique(np.concatenate([src, dst]))
    limit = 2 ** (8 * id_bytes) - 1
    if len(id_map) > limit:
        raise GraphFormatError(f"{len(id_map)} vertices overflow {8 * id_bytes}-bit ids")
    if weights is not None and len(weights) and int(np.max(weights)) > 2 ** 32 - 1:
        raise GraphFormatError("edge weight overflows 32 bits")
    s = np.searchsorted(id_map, src)
    d = np.searchsorted(id_map, dst)
    if not directed:
        s, d = np.concatenate([s, d]), np.concatenate([d, s])
        if weights is not None:
            weights = np.concatenate([weights, weights])
    return from_edges(s, d, len(id_map), weights, id_bytes=id_bytes), id_map


def load_edge_list(path, directed: bool = True, weighted: bool = False, id_bytes: int = 4):
    """Read a whitespace-separated edge list.  Returns ``(graph, id_map)``."""
    with open(path) as fh:
        src, dst, w = parse_edge_list(fh, weighted=weighted)
    return build_from_raw_edges(src, dst, w, directed=directed, id_bytes=id_bytes)


def write_binary_csr(g: CsrGraph, path) -> None:
    flags = (FLAG_WEIGHTED if g.weighted else 0) | (FLAG_WIDE_IDS if g.id_bytes == 8 else 0)
    id_dtype = "<u4" if g.id_bytes == 4 else "<u8"
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, FORMAT_VERSION, flags, g.num_vertices, g.num_edges))
        fh.write(g.offsets.astype("<u8").tobytes())
        fh.write(g.neighbors.astype(id_dtype).tobytes())
        if g.weighted:
            fh.write(g.weights.astype("<u4").tobytes())


def is_binary_csr(path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(4) == MAGIC


def read_binary_csr(path) -> CsrGraph:
    data = Path(path).read_bytes()
    if len(data) < HEADER.size:
        raise GraphFormatError("truncated header")
    magic, version, flags, nv, ne = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise GraphFormatError("bad magic")
    if version != FORMAT_VERSION:
        raise GraphFormatError(f"unsupported format version {version}")
    id_bytes = 8 if flags & FLAG_WIDE_IDS else 4
    weighted = bool(flags & FLAG_WEIGHTED)
    need = HEADER.size + 8 * (nv + 1) + id_bytes * ne + (4 * ne if weighted else 0)
    if len(data) < need:
        raise GraphFormatError(f"truncated file: {len(data)} bytes, expected {need}")
    pos = HEADER.size
    offsets = np.frombuffer(data, "<u8", nv + 1, pos).astype(np.int64)
    pos += 8 * (nv + 1)
    neighbors = np.frombuffer(data, "<u4" if id_bytes == 4 else "<u8", ne, pos)
    pos += id_bytes * ne
    weights = np.frombuffer(data, "<u4", ne, pos) if weighted else None
    try:
        return CsrGraph(offsets, neighbors, weights, id_bytes=id_bytes)
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from None


def write_u64_array(arr, path) -> None:
    Path(path).write_bytes(np.asarray(arr).astype("<u8").tobytes())


def read_u64_array(path) -> np.ndarray:
    return np.frombuffer(Path(path).read_bytes(), "<u8").astype(np.int64)
