"""Citation flow between communities and its z-score normalization.

``counts[i, j]`` is the number of citations flowing from community ``i`` to
community ``j``: a paper in ``i`` cited by a paper in ``j``. The community
weight compares each count with its expectation under random allocation
that keeps row and column totals,

    E_ij = N_i. * N_.j / N,    W_ij = (N_ij - E_ij) / sqrt(E_ij),

and is undefined (NaN) wherever ``E_ij`` is zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import svg
from .graph import UNLABELED, CitationGraph


class UnlabeledEndpoint(LookupError):
    """An edge endpoint has no community, so the edge carries no weight."""


@dataclass(frozen=True, eq=False)
class CommunityMatrix:
    labels: tuple[str, ...]
    counts: np.ndarray
    weights: np.ndarray | None = None
    dropped_edges: int = 0

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def expected(self) -> np.ndarray:
        total = self.total
        if total == 0:
            return np.zeros(self.counts.shape)
        return np.outer(self.row_sums, self.col_sums) / total

    @property
    def within(self) -> int:
        return int(np.trace(self.counts))

    @property
    def across(self) -> int:
        return self.total - self.within


def count_matrix(
    g: CitationGraph,
    community: np.ndarray | None = None,
    labels: tuple[str, ...] | None = None,
) -> CommunityMatrix:
    """Tally citations between communities.

    ``community`` gives a code per node (``-1`` for unlabeled) indexing
    ``labels``; by default the graph's own labels are used. Edges with an
    unlabeled endpoint are left out and counted in ``dropped_edges``.
    """
    if community is None:
        community, labels = g.community, g.community_labels
    elif labels is None:
        raise ValueError("labels are required with an explicit community array")
    codes = np.asarray(community, dtype=np.int64)
    c = len(labels)
    src, dst = g.edge_arrays()
    ci, cj = codes[src], codes[dst]
    ok = (ci != UNLABELED) & (cj != UNLABELED)
    if not ok.any():
        raise ValueError("no edge has both endpoints labeled")
    counts = np.bincount(ci[ok] * c + cj[ok], minlength=c * c).reshape(c, c).astype(np.int64)
    counts.setflags(write=False)
    return CommunityMatrix(tuple(labels), counts, None, int((~ok).sum()))


def weight_matrix(counts: np.ndarray) -> np.ndarray:
    n = np.asarray(counts, dtype=np.float64)
    total = n.sum()
    if total <= 0:
        raise ValueError("no citations to normalize")
    expected = np.outer(n.sum(axis=1), n.sum(axis=0)) / total
    w = np.full(n.shape, np.nan)
    ok = expected > 0
    w[ok] = (n[ok] - expected[ok]) / np.sqrt(expected[ok])
    return w


def community_weights(m: CommunityMatrix) -> CommunityMatrix:
    w = weight_matrix(m.counts)
    w.setflags(write=False)
    return replace(m, weights=w)


def _require_weights(m: CommunityMatrix) -> np.ndarray:
    if m.weights is None:
        raise ValueError("community weights not computed; call community_weights first")
    return m.weights


def edge_weight(m: CommunityMatrix, g: CitationGraph, cited: int, citing: int) -> float:
    """Community weight carried by the citation ``cited -> citing``."""
    w = _require_weights(m)
    ci, cj = int(g.community[cited]), int(g.community[citing])
    if ci == UNLABELED or cj == UNLABELED:
        raise UnlabeledEndpoint(f"edge {cited}->{citing} has an unlabeled endpoint")
    value = float(w[ci, cj])
    if np.isnan(value):
        raise LookupError(f"weight undefined for {m.labels[ci]!r} -> {m.labels[cj]!r}")
    return value


def edge_weights(m: CommunityMatrix, g: CitationGraph, cited: np.ndarray, citing: np.ndarray) -> np.ndarray:
    """Vectorized :func:`edge_weight`; NaN where unlabeled or undefined."""
    w = _require_weights(m)
    ci = g.community[cited]
    cj = g.community[citing]
    out = np.full(ci.shape, np.nan)
    ok = (ci != UNLABELED) & (cj != UNLABELED)
    out[ok] = w[ci[ok], cj[ok]]
    return out


def write_matrix_csv(path: str | Path, labels: tuple[str, ...], values: np.ndarray, fmt: str = "{:.6f}") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["", *labels])
        for lab, row in zip(labels, values):
            writer.writerow([lab, *("NA" if np.isnan(v) else fmt.format(v) for v in row)])


def export_heatmap(m: CommunityMatrix, path: str | Path, title: str = "Community weights") -> tuple[Path, Path]:
    """Write the weight matrix as an SVG heatmap and a CSV twin next to it."""
    w = _require_weights(m)
    path = Path(path)
    text = svg.heatmap(m.labels, w.tolist(), title)
    path.write_text(text, encoding="utf-8")
    twin = path.with_suffix(".csv")
    write_matrix_csv(twin, m.labels, w)
    return path, twin
