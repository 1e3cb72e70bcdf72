"""Recursive-matrix (RMAT) synthetic edge generator."""

from __future__ import annotations

import math

import numpy as np

DEFAULT_PROBS = (0.57, 0.19, 0.19, 0.05)


def rmat_generate(num_vertices: int, num_edges: int, seed: int = 0,
                  probs: tuple[float, float, float, float] = DEFAULT_PROBS) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(src, dst)`` arrays of ``num_edges`` RMAT edges over ``num_vertices`` ids.

    Ids are drawn on the enclosing power-of-two grid; edges landing outside
    ``[0, num_vertices)`` are redrawn.  Deterministic for a given seed.
    """
    a, b, c, d = probs
    if min(probs) < 0 or abs(a + b + c + d - 1.0) > 1e-9:
        raise ValueError("RMAT probabilities must be non-negative and sum to 1")
    if num_edges < 0 or (num_edges > 0 and num_vertices < 1):
        raise ValueError("need num_vertices >= 1 for a non-empty edge list")
    rng = np.random.default_rng(seed)
    scale = max(1, math.ceil(math.log2(max(num_vertices, 2))))
    cum = np.cumsum([a, b, c])
    src_out, dst_out = [], []
    have = 0
    while have < num_edges:
        batch = max(1024, int((num_edges - have) * 1.3))
        src = np.zeros(batch, dtype=np.int64)
        dst = np.zeros(batch, dtype=np.int64)
        for level in range(scale):
            quad = np.searchsorted(cum, rng.random(batch), side="right")
            bit = np.int64(1) << (scale - 1 - level)
            src |= np.where(quad >= 2, bit, 0)
            dst |= np.where((quad == 1) | (quad == 3), bit, 0)
        keep = (src < num_vertices) & (dst < num_vertices)
        src, dst = src[keep], dst[keep]
        take = min(len(src), num_edges - have)
        src_out.append(src[:take])
        dst_out.append(dst[:take])
        have += take
    if not src_out:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(src_out), np.concatenate(dst_out)


def write_edge_list(path, src, dst, weights=None) -> None:
    with open(path, "w") as fh:
        if weights is None:
            for s, t in zip(src.tolist(), dst.tolist()):
                fh.write(f"{s} {t}\n")
        else:
            for s, t, w in zip(src.tolist(), dst.tolist(), np.asarray(weights).tolist()):
                fh.write(f"{s} {t} {w}\n")
