"""Information cascades: everything reachable from a root along citing edges.

Size counts the root. Depth is the largest BFS level. Leaves are members with
no forward neighbor inside the cascade, which makes all three quantities
functions of the reachable set alone, independent of visit order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numba
import numpy as np

from . import _kernels
from .graph import CitationGraph, without_violations
from .rankstats import CorrelationResult, spearman
from .structure import log2_floor


@dataclass(frozen=True)
class CascadeStats:
    root: int
    size: int
    depth: int
    leaves: int


@dataclass(frozen=True, eq=False)
class CascadeTable:
    """Columnar cascade statistics, row ``i`` belonging to root ``root[i]``."""

    root: np.ndarray
    size: np.ndarray
    depth: np.ndarray
    leaves: np.ndarray

    def __len__(self) -> int:
        return int(self.root.size)

    def __getitem__(self, i: int) -> CascadeStats:
        return CascadeStats(int(self.root[i]), int(self.size[i]), int(self.depth[i]), int(self.leaves[i]))

    def __iter__(self) -> Iterator[CascadeStats]:
        return (self[i] for i in range(len(self)))

    def csv_rows(self) -> Iterator[tuple[int, int, int, int]]:
        return zip(self.root.tolist(), self.size.tolist(), self.depth.tolist(), self.leaves.tolist())


def cascade_from(g: CitationGraph, root: int) -> CascadeStats:
    if not 0 <= root < g.n_nodes:
        raise IndexError(f"unknown root id {root}")
    n = g.n_nodes
    mark = np.zeros(n, np.int64)
    dist = np.zeros(n, np.int64)
    queue = np.empty(n, np.int64)
    size, depth, leaves = _kernels.cascade_one(g.fwd_indptr, g.fwd_indices, root, mark, 1, dist, queue)
    return CascadeStats(root, int(size), int(depth), int(leaves))


def all_cascades(
    g: CitationGraph,
    roots: Sequence[int] | np.ndarray | None = None,
    *,
    method: str = "bitset",
    drop_violations: bool = True,
) -> CascadeTable:
    """Cascade statistics for every root (default: every node, in id order).

    ``method="bitset"`` advances 64 roots per sweep; ``"scalar"`` runs one
    BFS per root over a reusable epoch-stamped visited array. Both give
    identical results.
    """
    if drop_violations:
        g = without_violations(g)
    r = np.arange(g.n_nodes, dtype=np.int64) if roots is None else np.asarray(roots, dtype=np.int64)
    if r.size and (r.min() < 0 or r.max() >= g.n_nodes):
        raise IndexError("root id out of range")
    size = np.zeros(r.size, np.int64)
    depth = np.zeros(r.size, np.int64)
    leaves = np.zeros(r.size, np.int64)
    if r.size:
        if method == "bitset":
            chunks = max(1, min(numba.get_num_threads(), -(-r.size // _kernels.BATCH)))
            _kernels.cascades_bitparallel(g.fwd_indptr, g.fwd_indices, r, chunks, size, depth, leaves)
        elif method == "scalar":
            _kernels.cascades_scalar(g.fwd_indptr, g.fwd_indices, r, size, depth, leaves)
        else:
            raise ValueError(f"unknown method {method!r}")
    return CascadeTable(r, size, depth, leaves)


CORRELATION_PAIRS = (
    ("size", "outdeg"),
    ("size", "depth"),
    ("size", "leaves"),
    ("depth", "leaves"),
)


def cascade_correlations(
    table: CascadeTable, outdeg: Sequence[int] | np.ndarray
) -> dict[str, CorrelationResult | None]:
    """Spearman correlations among size, depth, leaves and out-degree.

    ``outdeg`` is indexed by node id. Keys are ``"size~outdeg"`` and so on;
    a ``None`` value means one of the columns was constant.
    """
    if len(table) < 3:
        raise ValueError(f"need at least 3 cascades, got {len(table)}")
    cols = {
        "size": table.size,
        "depth": table.depth,
        "leaves": table.leaves,
        "outdeg": np.asarray(outdeg)[table.root],
    }
    return {f"{a}~{b}": spearman(cols[a], cols[b]) for a, b in CORRELATION_PAIRS}


def log_binned_distribution(values: np.ndarray, exclude_singletons: bool = False) -> list[tuple[int, int, float]]:
    """(bin lower bound, count, count per unit value) over power-of-two bins.

    The per-unit density divides each count by its bin width so that a
    straight line on log-log axes reads as a power law.
    """
    v = np.asarray(values, dtype=np.int64)
    if exclude_singletons:
        v = v[v > 1]
    if v.size == 0:
        return []
    lower, counts = np.unique(log2_floor(v), return_counts=True)
    return [(int(lo), int(c), int(c) / max(int(lo), 1)) for lo, c in zip(lower, counts)]
