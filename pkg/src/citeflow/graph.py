"""Immutable citation graph in compressed offset-array (CSR) form.

Edges point from the cited paper to the citing paper, the direction in which
information flows. Out-degree is therefore the number of citations a paper
received; in-degree is the length of its in-corpus reference list.
"""

from __future__ import annotations

import hashlib
import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .ingest import CommunityMap, CorpusError, Kind, RawRecord

DEFAULT_YEAR_RANGE = (1900, 2010)
SNAPSHOT_MAGIC = b"CGRF1"
UNLABELED = -1


@dataclass(frozen=True)
class PaperNode:
    id: int
    external_id: str
    year: int
    community: str | None
    kind: Kind


@dataclass(frozen=True)
class CitationEdge:
    cited: int
    citing: int
    time_span: int


@dataclass(frozen=True)
class BuildReport:
    nodes: int
    edges: int
    duplicate_edges: int
    self_loops: int
    unresolved_edges: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _csr(src: np.ndarray, dst: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Offsets and neighbor array, neighbors sorted within each row."""
    order = np.lexsort((dst, src))
    counts = np.bincount(src, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, dst[order].astype(np.int32)


class CitationGraph:
    """Directed citation graph over densely indexed nodes.

    Node attributes are columnar arrays; adjacency is stored twice, forward
    (cited -> citing) and reverse, as exact transposes. All arrays are
    read-only.
    """

    __slots__ = (
        "external_ids",
        "year",
        "community",
        "community_labels",
        "kind",
        "fwd_indptr",
        "fwd_indices",
        "rev_indptr",
        "rev_indices",
        "span",
        "_index",
    )

    def __init__(
        self,
        external_ids: Sequence[str],
        year: np.ndarray,
        community: np.ndarray,
        community_labels: Sequence[str],
        kind: np.ndarray,
        cited: np.ndarray,
        citing: np.ndarray,
    ) -> None:
        n = len(external_ids)
        self.external_ids = tuple(external_ids)
        self.year = _frozen(np.asarray(year, dtype=np.int32).copy())
        self.community = _frozen(np.asarray(community, dtype=np.int32).copy())
        self.community_labels = tuple(community_labels)
        self.kind = _frozen(np.asarray(kind, dtype=np.int8).copy())
        if not (self.year.size == self.community.size == self.kind.size == n):
            raise ValueError("node attribute arrays disagree in length")
        cited = np.asarray(cited, dtype=np.int64)
        citing = np.asarray(citing, dtype=np.int64)
        fp, fi = _csr(cited, citing, n)
        rp, ri = _csr(citing, cited, n)
        self.fwd_indptr, self.fwd_indices = _frozen(fp), _frozen(fi)
        self.rev_indptr, self.rev_indices = _frozen(rp), _frozen(ri)
        src = np.repeat(np.arange(n, dtype=np.int32), np.diff(fp))
        self.span = _frozen(self.year[fi] - self.year[src])
        self._index: dict[str, int] | None = None

    # -- basic shape -------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.external_ids)

    @property
    def n_edges(self) -> int:
        return int(self.fwd_indices.size)

    @property
    def out_degree(self) -> np.ndarray:
        """Citations received."""
        return np.diff(self.fwd_indptr)

    @property
    def in_degree(self) -> np.ndarray:
        """In-corpus references made."""
        return np.diff(self.rev_indptr)

    def successors(self, v: int) -> np.ndarray:
        """Papers citing ``v``."""
        return self.fwd_indices[self.fwd_indptr[v] : self.fwd_indptr[v + 1]]

    def predecessors(self, v: int) -> np.ndarray:
        """Papers cited by ``v``."""
        return self.rev_indices[self.rev_indptr[v] : self.rev_indptr[v + 1]]

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(cited, citing) in forward storage order, aligned with ``span``."""
        src = np.repeat(np.arange(self.n_nodes, dtype=np.int32), np.diff(self.fwd_indptr))
        return src, self.fwd_indices

    def index_of(self, external_id: str) -> int:
        if self._index is None:
            self._index = {e: i for i, e in enumerate(self.external_ids)}
        return self._index[external_id]

    def community_of(self, v: int) -> str | None:
        c = int(self.community[v])
        return None if c == UNLABELED else self.community_labels[c]

    def node(self, v: int) -> PaperNode:
        if not 0 <= v < self.n_nodes:
            raise IndexError(f"unknown node id {v}")
        return PaperNode(v, self.external_ids[v], int(self.year[v]), self.community_of(v), Kind(int(self.kind[v])))

    def nodes(self) -> Iterator[PaperNode]:
        return (self.node(v) for v in range(self.n_nodes))

    def edges(self) -> Iterator[CitationEdge]:
        src, dst = self.edge_arrays()
        for u, v, s in zip(src.tolist(), dst.tolist(), self.span.tolist()):
            yield CitationEdge(u, v, s)

    def __repr__(self) -> str:
        return f"CitationGraph(nodes={self.n_nodes}, edges={self.n_edges}, communities={len(self.community_labels)})"

    # -- derived graphs ------------------------------------------------------

    def with_edges(self, cited: np.ndarray, citing: np.ndarray) -> "CitationGraph":
        return CitationGraph(
            self.external_ids, self.year, self.community, self.community_labels, self.kind, cited, citing
        )

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        write_snapshot(buf, self)
        return buf.getvalue()


# --- construction -------------------------------------------------------------


def build_graph(
    records: Sequence[RawRecord],
    edges: Iterable[tuple[str, str]],
    cmap: CommunityMap | Mapping[str, str] | None = None,
    *,
    year_range: tuple[int, int] | None = DEFAULT_YEAR_RANGE,
    strict: bool = True,
) -> tuple[CitationGraph, BuildReport]:
    """Index cleaned records and their ``(cited, citing)`` edges.

    Nodes are ordered by (year, external id) so the result does not depend on
    input order. Self-citations are dropped and duplicate edges collapsed;
    both are counted in the report. ``cmap`` is either a venue map or an
    explicit ``external_id -> community`` mapping.
    """
    recs = sorted(records, key=lambda r: (r.year if r.year is not None else -1, r.external_id))
    for r in recs:
        if r.year is None:
            raise CorpusError(f"record {r.external_id!r} has no year; clean the corpus first")
        if year_range is not None and not (year_range[0] <= r.year <= year_range[1]):
            raise CorpusError(f"record {r.external_id!r} year {r.year} outside {year_range}")
    ids = [r.external_id for r in recs]
    index = {e: i for i, e in enumerate(ids)}
    if len(index) != len(ids):
        raise CorpusError("duplicate external ids")

    if isinstance(cmap, CommunityMap):
        labels = list(cmap.labels)
        assigned = [cmap.match(r.venue) for r in recs]
    elif cmap is not None:
        labels = sorted(set(cmap.values()))
        assigned = [cmap.get(r.external_id) for r in recs]
    else:
        labels, assigned = [], [None] * len(recs)
    code = {c: i for i, c in enumerate(labels)}
    community = np.array([UNLABELED if a is None else code[a] for a in assigned], dtype=np.int32)
    year = np.array([r.year for r in recs], dtype=np.int32)
    kind = np.array([int(r.kind) for r in recs], dtype=np.int8)

    cited_l: list[int] = []
    citing_l: list[int] = []
    unresolved: list[str] = []
    for a, b in edges:
        ia = index.get(a)
        ib = index.get(b)
        if ia is None or ib is None:
            unresolved.append(a if ia is None else b)
            continue
        cited_l.append(ia)
        citing_l.append(ib)
    if unresolved and strict:
        shown = ", ".join(sorted(set(unresolved))[:10])
        raise CorpusError(f"{len(unresolved)} edge endpoint(s) not among the records: {shown}")

    n = len(ids)
    cited = np.asarray(cited_l, dtype=np.int64)
    citing = np.asarray(citing_l, dtype=np.int64)
    loops = cited == citing
    n_loops = int(loops.sum())
    cited, citing = cited[~loops], citing[~loops]
    key = np.unique(cited * max(n, 1) + citing)
    n_dup = int(cited.size - key.size)
    cited, citing = key // max(n, 1), key % max(n, 1)

    g = CitationGraph(ids, year, community, labels, kind, cited, citing)
    return g, BuildReport(n, g.n_edges, n_dup, n_loops, len(unresolved))


def time_violations(g: CitationGraph) -> list[CitationEdge]:
    """Edges whose citing paper is older than the cited one (negative span)."""
    src, dst = g.edge_arrays()
    bad = np.flatnonzero(g.span < 0)
    return [CitationEdge(int(src[k]), int(dst[k]), int(g.span[k])) for k in bad]


def without_violations(g: CitationGraph) -> CitationGraph:
    """Copy of ``g`` with every negative-span edge removed."""
    if not np.any(g.span < 0):
        return g
    src, dst = g.edge_arrays()
    ok = g.span >= 0
    return g.with_edges(src[ok], dst[ok])


def induced_subgraph(g: CitationGraph, node_set: Iterable[int]) -> tuple[CitationGraph, np.ndarray]:
    """Subgraph on ``node_set``; returns it with the old id of each new node."""
    keep = np.unique(np.fromiter((int(v) for v in node_set), dtype=np.int64))
    if keep.size and (keep[0] < 0 or keep[-1] >= g.n_nodes):
        bad = keep[(keep < 0) | (keep >= g.n_nodes)]
        raise IndexError(f"unknown node id(s): {bad[:10].tolist()}")
    remap = np.full(g.n_nodes, -1, dtype=np.int64)
    remap[keep] = np.arange(keep.size)
    src, dst = g.edge_arrays()
    inside = (remap[src] >= 0) & (remap[dst] >= 0)
    sub = CitationGraph(
        [g.external_ids[i] for i in keep.tolist()],
        g.year[keep],
        g.community[keep],
        g.community_labels,
        g.kind[keep],
        remap[src[inside]],
        remap[dst[inside]],
    )
    return sub, keep


# --- binary snapshot ----------------------------------------------------------
#
# magic "CGRF1", then little-endian u64 counts (nodes, edges, labels), the
# label and external-id tables as u64-length-prefixed UTF-8 blobs joined by
# "\n", per-node int32 year, int32 community, int8 kind, then forward and
# reverse offsets (int64, n+1) with their neighbor arrays (int32, m).


def _write_blob(fh, items: Sequence[str]) -> None:
    data = "\n".join(items).encode("utf-8")
    fh.write(struct.pack("<Q", len(data)))
    fh.write(data)


def _read_blob(fh, count: int) -> list[str]:
    (length,) = struct.unpack("<Q", fh.read(8))
    data = fh.read(length).decode("utf-8")
    return data.split("\n") if count else []


def write_snapshot(fh, g: CitationGraph) -> None:
    fh.write(SNAPSHOT_MAGIC)
    fh.write(struct.pack("<QQQ", g.n_nodes, g.n_edges, len(g.community_labels)))
    _write_blob(fh, g.community_labels)
    _write_blob(fh, g.external_ids)
    for arr, dt in (
        (g.year, "<i4"),
        (g.community, "<i4"),
        (g.kind, "i1"),
        (g.fwd_indptr, "<i8"),
        (g.fwd_indices, "<i4"),
        (g.rev_indptr, "<i8"),
        (g.rev_indices, "<i4"),
    ):
        fh.write(np.ascontiguousarray(arr, dtype=dt).tobytes())


def read_snapshot(fh) -> CitationGraph:
    if fh.read(len(SNAPSHOT_MAGIC)) != SNAPSHOT_MAGIC:
        raise CorpusError("not a CGRF1 graph snapshot")
    n, m, c = struct.unpack("<QQQ", fh.read(24))
    labels = _read_blob(fh, c)
    ids = _read_blob(fh, n)

    def take(dt: str, count: int) -> np.ndarray:
        dtype = np.dtype(dt)
        raw = fh.read(dtype.itemsize * count)
        if len(raw) != dtype.itemsize * count:
            raise CorpusError("truncated graph snapshot")
        return np.frombuffer(raw, dtype=dtype)

    year, community, kind = take("<i4", n), take("<i4", n), take("i1", n)
    fwd_indptr, fwd_indices = take("<i8", n + 1), take("<i4", m)
    rev_indptr, rev_indices = take("<i8", n + 1), take("<i4", m)
    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(fwd_indptr))
    g = CitationGraph(ids, year, community, labels, kind, src, fwd_indices.astype(np.int64))
    if not (np.array_equal(g.rev_indptr, rev_indptr) and np.array_equal(g.rev_indices, rev_indices)):
        raise CorpusError("snapshot reverse adjacency is not the transpose of the forward one")
    return g


def save_graph(path: str | Path, g: CitationGraph, provenance: Mapping | None = None) -> Path:
    """Write ``path`` (binary snapshot) plus ``path.json`` with provenance."""
    path = Path(path)
    data = g.to_bytes()
    path.write_bytes(data)
    side = {
        "format": "CGRF1",
        "nodes": g.n_nodes,
        "edges": g.n_edges,
        "communities": list(g.community_labels),
        "sha256": hashlib.sha256(data).hexdigest(),
        "provenance": dict(provenance or {}),
    }
    sidecar = path.with_name(path.name + ".json")
    sidecar.write_text(json.dumps(side, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return sidecar


def load_graph(path: str | Path) -> CitationGraph:
    with open(path, "rb") as fh:
        return read_snapshot(fh)
