"""Seeded synthetic citation corpora with plantable effects.

Papers get a uniform year and community. Processing year by year, each paper
draws a Poisson number of references among papers from strictly earlier
years, with probability proportional to

    fitness * (citations + 1) ** pa_strength * 2 ** (-age / recency_half_life)

restricted to its own community with probability ``homophily``. A paper's
fitness is set once its references are chosen, from the share of references
inside its own community and their mean age; ``ImpactCouplings`` control how
strongly these feed into later citations, which is how correlations between
citing behaviour and impact are planted.

Randomness for paper ``i`` comes from a Philox stream whose counter is keyed
by ``i``, so output does not depend on generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ingest import CommunityMap, Kind, RawRecord, write_community_map, write_edges, write_nodes

_MAX_ATTEMPTS = 8
_VENUES_PER_COMMUNITY = 3
_TAG_ATTRIBUTES = 0
_TAG_REFERENCES = 1


@dataclass(frozen=True)
class ImpactCouplings:
    weight_effect: float = 0.0
    recency_effect: float = 0.0
    # added linearly across the year range: effect at the last year is
    # weight_effect + weight_trend
    weight_trend: float = 0.0


@dataclass(frozen=True)
class GenConfig:
    n_nodes: int = 10_000
    years: tuple[int, int] = (1970, 2005)
    n_communities: int = 10
    refs_per_paper: float = 3.4
    pa_strength: float = 1.0
    homophily: float = 0.7
    recency_half_life: float = 5.0
    impact_couplings: ImpactCouplings = field(default_factory=ImpactCouplings)
    book_fraction: float = 0.0
    book_refs_factor: float = 3.0
    seed: int = 42

    def __post_init__(self) -> None:
        if not self.n_nodes >= self.n_communities >= 1:
            raise ValueError("need n_nodes >= n_communities >= 1")
        if self.years[0] > self.years[1]:
            raise ValueError("empty year range")
        if not 0.0 <= self.homophily <= 1.0:
            raise ValueError("homophily must lie in [0, 1]")
        if not 0.0 <= self.book_fraction <= 1.0:
            raise ValueError("book_fraction must lie in [0, 1]")
        if self.refs_per_paper < 0 or self.pa_strength < 0 or self.book_refs_factor < 0:
            raise ValueError("refs_per_paper, pa_strength and book_refs_factor must be >= 0")
        if not self.recency_half_life > 0:
            raise ValueError("recency_half_life must be positive (inf disables decay)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class GenReport:
    papers: int = 0
    edges: int = 0
    # references requested but not placed: no earlier paper (first year of the
    # range), empty own-community pool, or repeated duplicate draws
    clipped_refs: int = 0


@dataclass
class SynthCorpus:
    records: list[RawRecord]
    edges: list[tuple[str, str]]
    cmap: CommunityMap
    report: GenReport

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"nodes": out / "nodes.tsv", "edges": out / "edges.tsv", "communities": out / "communities.txt"}
        write_nodes(paths["nodes"], self.records)
        write_edges(paths["edges"], self.edges)
        write_community_map(paths["communities"], self.cmap)
        return paths


def community_label(c: int) -> str:
    return f"Area {c:02d}"


def _stream(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed | (tag << 64), counter=[0, 0, index, 0]))


def generate(config: GenConfig) -> SynthCorpus:
    cfg = config
    n, C = cfg.n_nodes, cfg.n_communities
    y0, y1 = cfg.years

    attr = _stream(cfg.seed, _TAG_ATTRIBUTES)
    raw_year = attr.integers(y0, y1 + 1, size=n)
    raw_comm = attr.integers(0, C, size=n)
    raw_venue = attr.integers(0, _VENUES_PER_COMMUNITY, size=n)
    raw_book = attr.random(n) < cfg.book_fraction
    order = np.argsort(raw_year, kind="stable")
    year = raw_year[order]
    comm = raw_comm[order]
    venue = raw_venue[order]
    is_book = raw_book[order]

    decay_rate = math.log(2.0) / cfg.recency_half_life
    couplings = cfg.impact_couplings
    span = max(y1 - y0, 1)

    outdeg = np.zeros(n, dtype=np.float64)
    fitness = np.ones(n, dtype=np.float64)
    cited_idx: list[int] = []
    citing_idx: list[int] = []
    report = GenReport(papers=n)

    year_starts = np.searchsorted(year, np.arange(y0, y1 + 2))
    for yi, Y in enumerate(range(y0, y1 + 1)):
        lo, hi = int(year_starts[yi]), int(year_starts[yi + 1])
        if lo == hi:
            continue
        pool = lo  # candidates are papers [0, lo)
        if pool:
            by_comm = np.argsort(comm[:pool], kind="stable")
            w = fitness[by_comm] * np.power(outdeg[by_comm] + 1.0, cfg.pa_strength)
            w *= np.exp(-decay_rate * (Y - year[by_comm]))
            cum = np.cumsum(w)
            # community c owns the weight interval [seg_lo[c], seg_hi[c])
            cum0 = np.concatenate(([0.0], cum))
            seg = np.searchsorted(comm[by_comm], np.arange(C + 1))
            seg_lo, seg_hi = cum0[seg[:-1]], cum0[seg[1:]]
        weight_effect = couplings.weight_effect + couplings.weight_trend * (Y - y0) / span

        for i in range(lo, hi):
            rng = _stream(cfg.seed, _TAG_REFERENCES, i)
            mean = cfg.refs_per_paper * (cfg.book_refs_factor if is_book[i] else 1.0)
            k = int(rng.poisson(mean))
            if not pool:
                report.clipped_refs += k
                continue
            chosen: list[int] = []
            for _ in range(k):
                target = -1
                for _attempt in range(_MAX_ATTEMPTS):
                    restrict, u = rng.random(2)
                    if restrict < cfg.homophily:
                        a, b = seg_lo[comm[i]], seg_hi[comm[i]]
                    else:
                        a, b = 0.0, cum[-1]
                    if b <= a:
                        break
                    pos = int(np.searchsorted(cum, a + u * (b - a), side="right"))
                    cand = int(by_comm[min(pos, pool - 1)])
                    if cand not in chosen:
                        target = cand
                        break
                if target < 0:
                    report.clipped_refs += 1
                    continue
                chosen.append(target)
            if chosen:
                tgt = np.asarray(chosen)
                outdeg[tgt] += 1.0
                cited_idx.extend(chosen)
                citing_idx.extend([i] * len(chosen))
                same = float(np.mean(comm[tgt] == comm[i]))
                age = float(np.mean(Y - year[tgt]))
                fitness[i] = math.exp(weight_effect * same + couplings.recency_effect * age)

    width = max(7, len(str(n - 1)))
    ids = [f"P{i:0{width}d}" for i in range(n)]
    records = [
        RawRecord(
            ids[i],
            f"Synthetic paper {i}",
            (),
            int(year[i]),
            f"SYN-C{int(comm[i]):02d}-V{int(venue[i])}",
            Kind.BOOK if is_book[i] else Kind.PAPER,
        )
        for i in range(n)
    ]
    edges = [(ids[a], ids[b]) for a, b in zip(cited_idx, citing_idx)]
    report.edges = len(edges)
    labels = tuple(community_label(c) for c in range(C))
    cmap = CommunityMap(labels, tuple((f"SYN-C{c:02d}-", labels[c]) for c in range(C)))
    return SynthCorpus(records, edges, cmap, report)
