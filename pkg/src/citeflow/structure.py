"""Degree distributions, connectivity, reachability and geodesics."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable

import numba
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .graph import CitationGraph, induced_subgraph
from .ingest import Kind

EXACT_NODE_CAP = 20_000
DEFAULT_GEODESIC_SOURCES = 1_000


@dataclass(frozen=True)
class DegreeHistogram:
    direction: str
    binning: str
    bins: tuple[tuple[int, int, float], ...]  # (lower bound, count, fraction)

    @property
    def total(self) -> int:
        return sum(c for _, c, _ in self.bins)

    def csv_rows(self) -> list[tuple[int, int, str]]:
        return [(lo, c, f"{f:.9f}") for lo, c, f in self.bins]


def _degrees(g: CitationGraph, direction: str) -> np.ndarray:
    if direction == "out":
        return g.out_degree
    if direction == "in":
        return g.in_degree
    raise ValueError(f"direction must be 'in' or 'out', not {direction!r}")


def kind_mask(g: CitationGraph, kinds: Iterable[Kind] | None) -> np.ndarray:
    if kinds is None:
        return np.ones(g.n_nodes, dtype=bool)
    return np.isin(g.kind, np.fromiter((int(k) for k in kinds), dtype=np.int8))


def degree_histogram(
    g: CitationGraph,
    direction: str = "out",
    kinds: Iterable[Kind] | None = None,
    binning: str = "exact",
) -> DegreeHistogram:
    """Histogram of in- or out-degree over nodes of the given kinds.

    Zero-degree nodes keep their own bin. ``log2`` binning groups degrees
    into [2^k, 2^(k+1)), labelled by the lower bound.
    """
    deg = _degrees(g, direction)[kind_mask(g, kinds)]
    if binning not in ("exact", "log2"):
        raise ValueError(f"binning must be 'exact' or 'log2', not {binning!r}")
    if deg.size == 0:
        return DegreeHistogram(direction, binning, ())
    lower, counts = np.unique(deg if binning == "exact" else log2_floor(deg), return_counts=True)
    total = deg.size
    bins = tuple((int(lo), int(c), int(c) / total) for lo, c in zip(lower, counts))
    return DegreeHistogram(direction, binning, bins)


def log2_floor(values: np.ndarray) -> np.ndarray:
    """Largest power of two not above each value; zero stays zero."""
    v = np.asarray(values, dtype=np.int64)
    out = np.zeros_like(v)
    pos = v > 0
    # bit_length via frexp avoids float log2 rounding at exact powers
    _, exp = np.frexp(v[pos].astype(np.float64))
    out[pos] = np.left_shift(np.int64(1), (exp - 1).astype(np.int64))
    return out


def top_citation_share(g: CitationGraph, fraction: float = 0.01) -> float:
    """Share of all citations received by the most-cited ``fraction`` of nodes."""
    deg = np.sort(g.out_degree)[::-1]
    total = int(deg.sum())
    if total == 0:
        return 0.0
    k = max(1, int(np.ceil(fraction * deg.size)))
    return int(deg[:k].sum()) / total


@dataclass(frozen=True)
class ComponentReport:
    scc_count: int
    largest_scc_size: int
    wcc_count: int
    largest_wcc_fraction: float

    def to_dict(self) -> dict:
        return asdict(self)


def _adjacency(g: CitationGraph) -> csr_matrix:
    n = g.n_nodes
    data = np.ones(g.n_edges, dtype=np.int8)
    return csr_matrix((data, g.fwd_indices, g.fwd_indptr), shape=(n, n))


def components(g: CitationGraph) -> ComponentReport:
    if g.n_nodes == 0:
        return ComponentReport(0, 0, 0, 0.0)
    adj = _adjacency(g)
    n_scc, scc = connected_components(adj, directed=True, connection="strong")
    n_wcc, wcc = connected_components(adj, directed=True, connection="weak")
    return ComponentReport(
        int(n_scc),
        int(np.bincount(scc).max()),
        int(n_wcc),
        float(np.bincount(wcc).max()) / g.n_nodes,
    )


def backward_reach_fraction(g: CitationGraph, seed_years: tuple[int, int]) -> float:
    """Share of papers older than ``seed_years`` that the seed papers cite, directly or not."""
    lo, hi = seed_years
    seeds = np.flatnonzero((g.year >= lo) & (g.year <= hi))
    earlier = g.year < lo
    if seeds.size == 0:
        raise ValueError(f"no papers published in {lo}-{hi}")
    n_earlier = int(earlier.sum())
    if n_earlier == 0:
        raise ValueError(f"no papers published before {lo}")
    seen = _kernels.multi_source_reach(g.rev_indptr, g.rev_indices, seeds.astype(np.int64))
    return int(np.count_nonzero(seen & earlier)) / n_earlier


@dataclass(frozen=True)
class GeodesicReport:
    mean_directed_distance: float | None
    max_observed: int
    reachable_pair_fraction: float
    reachable_pairs: int
    method: str
    sources: int
    seed: int | None

    def to_dict(self) -> dict:
        return asdict(self)


def geodesics(
    g: CitationGraph,
    sources: int | None = None,
    seed: int = 0,
    exact_cap: int = EXACT_NODE_CAP,
) -> GeodesicReport:
    """Shortest directed path statistics along forward edges.

    ``sources=None`` runs BFS from every node (refused above ``exact_cap``
    nodes). Otherwise ``sources`` start nodes are drawn uniformly without
    replacement using ``seed``; the mean is over reached ordered pairs from
    those sources and the reachable fraction is reached / (k * (n - 1)).
    """
    n = g.n_nodes
    if sources is None:
        if n > exact_cap:
            raise ValueError(f"exact geodesics refused for {n} nodes (cap {exact_cap}); pass sources")
        src = np.arange(n, dtype=np.int64)
        method, used_seed = "exact", None
    else:
        if sources < 1:
            raise ValueError("need at least one source")
        if sources >= n:
            src = np.arange(n, dtype=np.int64)
        else:
            rng = np.random.default_rng(seed)
            src = np.sort(rng.choice(n, size=sources, replace=False)).astype(np.int64)
        method, used_seed = "sampled", seed
    k = src.size
    reached = np.zeros(k, np.int64)
    dist_sum = np.zeros(k, np.int64)
    ecc = np.zeros(k, np.int64)
    if k:
        _kernels.geodesic_sums(g.fwd_indptr, g.fwd_indices, src, numba.get_num_threads(), reached, dist_sum, ecc)
    pairs = int(reached.sum())
    mean = float(dist_sum.sum()) / pairs if pairs else None
    frac = pairs / (k * (n - 1)) if k and n > 1 else 0.0
    return GeodesicReport(mean, int(ecc.max()) if k else 0, frac, pairs, method, int(k), used_seed)


@dataclass(frozen=True)
class RichClubReport:
    k: int
    top_edges: int
    top_components: ComponentReport
    random_edges: int
    random_components: ComponentReport
    seed: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["top_density"] = self.top_edges / (self.k * (self.k - 1)) if self.k > 1 else 0.0
        d["random_density"] = self.random_edges / (self.k * (self.k - 1)) if self.k > 1 else 0.0
        return d


def top_cited(g: CitationGraph, k: int) -> np.ndarray:
    """Ids of the ``k`` most cited nodes; ties go to the lower id."""
    if not 0 <= k <= g.n_nodes:
        raise ValueError(f"k={k} outside [0, {g.n_nodes}]")
    order = np.lexsort((np.arange(g.n_nodes), -g.out_degree))
    return np.sort(order[:k])


def top_cited_subgraph(g: CitationGraph, k: int, seed: int = 0) -> tuple[CitationGraph, RichClubReport]:
    """Induced subgraph of the ``k`` most cited papers, contrasted with ``k`` random ones."""
    top_sub, _ = induced_subgraph(g, top_cited(g, k))
    rng = np.random.default_rng(seed)
    rand_sub, _ = induced_subgraph(g, rng.choice(g.n_nodes, size=k, replace=False))
    report = RichClubReport(k, top_sub.n_edges, components(top_sub), rand_sub.n_edges, components(rand_sub), seed)
    return top_sub, report
