"""Normalized impact and the edge-level correlation studies.

A paper's impact is its citation count divided by the mean citation count of
papers in the same (community, year) cell. The edge studies relate each
citation's community weight and time span to the impact of the citing paper.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .communities import CommunityMatrix, edge_weights
from .graph import UNLABELED, CitationGraph
from .ingest import Kind
from .rankstats import CorrelationResult, pearson, spearman

DEFAULT_ERAS = ((1980, 1984), (1985, 1989), (1990, 1994), (1995, 1999))
MAJOR_COMMUNITY_SHARE = 0.05
MIN_ROWS = 3


@dataclass(frozen=True, eq=False)
class ImpactTable:
    """Per labeled node: raw citations, cell and normalized impact (NaN if undefined)."""

    node: np.ndarray
    raw_outdeg: np.ndarray
    community: np.ndarray
    year: np.ndarray
    normalized: np.ndarray
    by_node: np.ndarray  # normalized impact indexed by node id, NaN when absent

    def __len__(self) -> int:
        return int(self.node.size)

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.normalized)


def normalized_impact(g: CitationGraph) -> ImpactTable:
    labeled = np.flatnonzero(g.community != UNLABELED)
    raw = g.out_degree[labeled].astype(np.int64)
    comm = g.community[labeled].astype(np.int64)
    year = g.year[labeled].astype(np.int64)
    normalized = np.full(labeled.size, np.nan)
    if labeled.size:
        y0 = int(year.min())
        span = int(year.max()) - y0 + 1
        cell = comm * span + (year - y0)
        sums = np.bincount(cell, weights=raw)
        counts = np.bincount(cell)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = sums / counts
        m = mean[cell]
        ok = m > 0
        normalized[ok] = raw[ok] / m[ok]
    by_node = np.full(g.n_nodes, np.nan)
    by_node[labeled] = normalized
    return ImpactTable(labeled, raw, comm, year, normalized, by_node)


@dataclass(frozen=True)
class StudyFilter:
    """Which citing papers enter the edge-level studies.

    Citing papers are dropped if their kind is excluded, if they make
    ``max_refs`` or more in-corpus references, or if published after
    ``max_year``.
    """

    exclude_kinds: frozenset[Kind] = frozenset({Kind.BOOK, Kind.CHAPTER})
    max_refs: int | None = 40
    max_year: int | None = 2000

    def to_dict(self) -> dict:
        return {
            "exclude_kinds": sorted(k.token for k in self.exclude_kinds),
            "max_refs": self.max_refs,
            "max_year": self.max_year,
        }


@dataclass(frozen=True, eq=False)
class EdgeTable:
    cited: np.ndarray
    citing: np.ndarray
    c_weight: np.ndarray
    time_diff: np.ndarray
    impact: np.ndarray
    raw_impact: np.ndarray
    citing_year: np.ndarray
    citing_community: np.ndarray
    dropped: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.cited.size)

    def subset(self, mask: np.ndarray) -> "EdgeTable":
        return EdgeTable(
            self.cited[mask],
            self.citing[mask],
            self.c_weight[mask],
            self.time_diff[mask],
            self.impact[mask],
            self.raw_impact[mask],
            self.citing_year[mask],
            self.citing_community[mask],
            {},
        )

    def write_csv(self, path: str | Path, g: CitationGraph | None = None) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cited", "citing", "c_weight", "time_diff", "citing_impact", "citing_year", "citing_community"])
            for k in range(len(self)):
                u, v = int(self.cited[k]), int(self.citing[k])
                w.writerow(
                    [
                        g.external_ids[u] if g else u,
                        g.external_ids[v] if g else v,
                        f"{self.c_weight[k]:.6f}",
                        int(self.time_diff[k]),
                        f"{self.impact[k]:.6f}",
                        int(self.citing_year[k]),
                        g.community_labels[self.citing_community[k]] if g else int(self.citing_community[k]),
                    ]
                )


def edge_study(
    g: CitationGraph,
    weights: CommunityMatrix,
    impacts: ImpactTable,
    filt: StudyFilter = StudyFilter(),
) -> EdgeTable:
    """One row per citation whose citing paper passes ``filt`` and whose weight and impact exist."""
    cited, citing = g.edge_arrays()
    cited = cited.astype(np.int64)
    citing = citing.astype(np.int64)
    keep = np.ones(cited.size, dtype=bool)
    dropped: dict[str, int] = {}

    def drop(name: str, bad: np.ndarray) -> None:
        nonlocal keep
        dropped[name] = int((keep & bad).sum())
        keep &= ~bad

    if filt.exclude_kinds:
        excluded = np.fromiter((int(k) for k in filt.exclude_kinds), dtype=np.int8)
        drop("excluded_kind", np.isin(g.kind[citing], excluded))
    if filt.max_refs is not None:
        drop("too_many_refs", g.in_degree[citing] >= filt.max_refs)
    if filt.max_year is not None:
        drop("after_max_year", g.year[citing] > filt.max_year)
    drop("unlabeled_endpoint", (g.community[cited] == UNLABELED) | (g.community[citing] == UNLABELED))
    cw = edge_weights(weights, g, cited, citing)
    drop("undefined_weight", np.isnan(cw))
    imp = impacts.by_node[citing]
    drop("undefined_impact", np.isnan(imp))

    return EdgeTable(
        cited[keep],
        citing[keep],
        cw[keep],
        g.span[keep].astype(np.int64),
        imp[keep],
        g.out_degree[citing[keep]].astype(np.int64),
        g.year[citing[keep]].astype(np.int64),
        g.community[citing[keep]].astype(np.int64),
        dropped,
    )


def _spearman_or_none(x: np.ndarray, y: np.ndarray) -> CorrelationResult | None:
    if x.size < MIN_ROWS:
        return None
    return spearman(x, y)


def overall_correlations(table: EdgeTable) -> dict[str, CorrelationResult | None]:
    if len(table) < MIN_ROWS:
        raise ValueError(f"need at least {MIN_ROWS} rows, got {len(table)}")
    return {
        "time_diff": spearman(table.time_diff, table.impact),
        "c_weight": spearman(table.c_weight, table.impact),
    }


def nearest_rank(values: Sequence[float] | np.ndarray, q: float) -> float:
    """Value at rank ceil(q * n) of the sorted sample."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise ValueError("empty sample")
    if not 0.0 < q <= 1.0:
        raise ValueError("quantile must lie in (0, 1]")
    rank = max(1, math.ceil(q * v.size - 1e-9))
    return float(v[rank - 1])


def split_correlations(table: EdgeTable, quantile: float = 0.9, on: str = "normalized") -> dict:
    """Correlations separately for the bottom and top impact groups of citing papers.

    Papers are split at the nearest-rank ``quantile`` of impact; ties at the
    threshold go to the bottom group. ``on`` picks normalized or raw impact.
    """
    column = {"normalized": table.impact, "raw": table.raw_impact}[on]
    papers, first = np.unique(table.citing, return_index=True)
    if papers.size < 10:
        raise ValueError(f"need at least 10 distinct citing papers, got {papers.size}")
    threshold = nearest_rank(column[first], quantile)
    bottom_rows = column <= threshold
    out: dict = {"quantile": quantile, "on": on, "threshold": threshold}
    for name, mask in (("bottom", bottom_rows), ("top", ~bottom_rows)):
        sub = table.subset(mask)
        out[name] = {
            "papers": int(np.unique(sub.citing).size),
            "rows": len(sub),
            "time_diff": _spearman_or_none(sub.time_diff, sub.impact),
            "c_weight": _spearman_or_none(sub.c_weight, sub.impact),
        }
    return out


def by_community_correlations(table: EdgeTable, g: CitationGraph) -> list[dict]:
    """Spearman of community weight vs impact within each citing community.

    ``share`` is the community's fraction of all labeled papers; ``major``
    marks shares above 5%, the reporting cut used for the per-area table.
    """
    labeled = g.community[g.community != UNLABELED]
    share = np.bincount(labeled, minlength=len(g.community_labels)) / max(labeled.size, 1)
    out = []
    for c, label in enumerate(g.community_labels):
        sub = table.subset(table.citing_community == c)
        out.append(
            {
                "community": label,
                "share": float(share[c]),
                "major": bool(share[c] > MAJOR_COMMUNITY_SHARE),
                "rows": len(sub),
                "c_weight": _spearman_or_none(sub.c_weight, sub.impact),
            }
        )
    return out


def by_era_correlations(table: EdgeTable, eras: Iterable[tuple[int, int]] = DEFAULT_ERAS) -> list[dict]:
    """Pearson r of community weight vs log impact, citing papers grouped by year range.

    Rows whose citing paper has zero impact have no logarithm and are
    excluded, with their number reported.
    """
    out = []
    for lo, hi in eras:
        sub = table.subset((table.citing_year >= lo) & (table.citing_year <= hi))
        positive = sub.impact > 0
        r = None
        if positive.sum() >= MIN_ROWS:
            r = pearson(sub.c_weight[positive], np.log(sub.impact[positive]))
        out.append(
            {
                "era": (lo, hi),
                "rows": int(positive.sum()),
                "zero_impact_excluded": int((~positive).sum()),
                "c_weight_log_impact": r,
            }
        )
    return out


def books_study(g: CitationGraph) -> dict:
    """Spearman of time span vs raw citation count of the citing document.

    Computed for citations made by books and chapters, and for comparison by
    regular papers. A group with fewer than 3 citations is reported as None.
    """
    cited, citing = g.edge_arrays()
    span = g.span
    outdeg = g.out_degree
    out = {}
    for name, kinds in (("books", (Kind.BOOK, Kind.CHAPTER)), ("papers", (Kind.PAPER,))):
        mask = np.isin(g.kind[citing], np.array([int(k) for k in kinds], dtype=np.int8))
        x, y = span[mask], outdeg[citing[mask]]
        out[name] = {"edges": int(mask.sum()), "time_span": _spearman_or_none(x, y)}
    return out


def result_row(group: str, res: CorrelationResult | None, n: int = 0) -> dict:
    """Flat record ``{group, statistic, rho_or_r, p, ci_low, ci_high, n}``."""
    if res is None:
        return {"group": group, "statistic": None, "rho_or_r": None, "p": None, "ci_low": None, "ci_high": None, "n": n}
    d = res.to_dict()
    return {
        "group": group,
        "statistic": d["statistic"],
        "rho_or_r": d["value"],
        "p": d["p"],
        "ci_low": d["ci_low"],
        "ci_high": d["ci_high"],
        "n": d["n"],
    }
