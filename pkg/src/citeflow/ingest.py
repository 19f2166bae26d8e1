"""Corpus files: parsing, cleaning, venue-to-community assignment and record linkage.

File formats (all UTF-8, tab separated):

* nodes: header ``id year venue kind title authors``; an empty field means
  absent; ``kind`` is one of paper/book/chapter/other; authors are ``;``-joined.
* edges: ``cited_id citing_id`` per line, ``#`` starts a comment.
* community map: ``communities: A, B, ...`` header, then ordered
  ``pattern community`` rules. A pattern is a case-insensitive substring of
  the venue, or an exact (case-insensitive) venue when prefixed with ``=``.
"""

from __future__ import annotations

import math
import re
from collections import defaultdict
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

NODES_HEADER = ("id", "year", "venue", "kind", "title", "authors")


class Kind(IntEnum):
    PAPER = 0
    BOOK = 1
    CHAPTER = 2
    OTHER = 3

    @property
    def token(self) -> str:
        return _KIND_TOKENS[self]

    @classmethod
    def parse(cls, text: str) -> "Kind":
        text = text.strip().lower()
        if not text:
            return cls.OTHER
        try:
            return _TOKEN_KINDS[text]
        except KeyError:
            raise ValueError(f"unknown kind {text!r}") from None


_KIND_TOKENS = {Kind.PAPER: "paper", Kind.BOOK: "book", Kind.CHAPTER: "chapter", Kind.OTHER: "other"}
_TOKEN_KINDS = {v: k for k, v in _KIND_TOKENS.items()}


class CorpusError(ValueError):
    """Malformed or inconsistent corpus input."""


@dataclass(frozen=True)
class RawRecord:
    external_id: str
    title: str = ""
    authors: tuple[str, ...] = ()
    year: int | None = None
    venue: str | None = None
    kind: Kind = Kind.PAPER


class Corpus(NamedTuple):
    records: list[RawRecord]
    edges: list[tuple[str, str]]
    dropped_edges: int = 0


def _open_lines(path: str | Path) -> Iterable[tuple[int, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            yield lineno, line.rstrip("\r\n")


def read_nodes(path: str | Path) -> list[RawRecord]:
    records: list[RawRecord] = []
    seen: dict[str, int] = {}
    header_seen = False
    for lineno, line in _open_lines(path):
        if not line.strip():
            continue
        cols = line.split("\t")
        if not header_seen:
            if tuple(c.strip().lower() for c in cols) != NODES_HEADER:
                raise CorpusError(f"{path}:{lineno}: expected header {' '.join(NODES_HEADER)!r} (tab separated)")
            header_seen = True
            continue
        if len(cols) != len(NODES_HEADER):
            raise CorpusError(f"{path}:{lineno}: expected {len(NODES_HEADER)} fields, got {len(cols)}")
        ext_id, year_s, venue, kind_s, title, authors_s = (c.strip() for c in cols)
        if not ext_id:
            raise CorpusError(f"{path}:{lineno}: empty id")
        if ext_id in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate id {ext_id!r} (first on line {seen[ext_id]})")
        seen[ext_id] = lineno
        try:
            year = int(year_s) if year_s else None
            kind = Kind.parse(kind_s)
        except ValueError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from None
        authors = tuple(a.strip() for a in authors_s.split(";") if a.strip())
        records.append(RawRecord(ext_id, title, authors, year, venue or None, kind))
    if not header_seen:
        raise CorpusError(f"{path}: missing header")
    return records


def read_edges(path: str | Path) -> list[tuple[str, str]]:
    edges: list[tuple[str, str]] = []
    for lineno, line in _open_lines(path):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        cols = [c.strip() for c in body.split("\t")]
        if len(cols) != 2 or not cols[0] or not cols[1]:
            raise CorpusError(f"{path}:{lineno}: expected 'cited_id<TAB>citing_id'")
        if lineno == 1 and cols == ["cited_id", "citing_id"]:
            continue
        edges.append((cols[0], cols[1]))
    return edges


def load_corpus(nodes_path: str | Path, edges_path: str | Path, *, strict: bool = True) -> Corpus:
    """Read a nodes/edges pair. Edges are returned as ``(cited, citing)``.

    In strict mode an edge endpoint missing from the nodes file is an error;
    otherwise such edges are dropped and counted.
    """
    records = read_nodes(nodes_path)
    edges = read_edges(edges_path)
    known = {r.external_id for r in records}
    kept = [e for e in edges if e[0] in known and e[1] in known]
    dropped = len(edges) - len(kept)
    if dropped and strict:
        missing = sorted({x for e in edges for x in e if x not in known})
        shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
        raise CorpusError(f"{dropped} edge(s) reference undeclared ids: {shown}")
    return Corpus(records, kept, dropped)


def write_nodes(path: str | Path, records: Iterable[RawRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(NODES_HEADER) + "\n")
        for r in records:
            fh.write(
                "\t".join(
                    (
                        r.external_id,
                        "" if r.year is None else str(r.year),
                        r.venue or "",
                        r.kind.token,
                        r.title,
                        ";".join(r.authors),
                    )
                )
                + "\n"
            )


def write_edges(path: str | Path, edges: Iterable[tuple[str, str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# cited_id\tciting_id\n")
        for cited, citing in edges:
            fh.write(f"{cited}\t{citing}\n")


# --- community map -----------------------------------------------------------


@dataclass(frozen=True)
class CommunityMap:
    labels: tuple[str, ...]
    rules: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if not self.rules:
            raise CorpusError("community map needs at least one rule")
        declared = set(self.labels)
        if len(declared) != len(self.labels):
            raise CorpusError("duplicate community label in header")
        for pattern, community in self.rules:
            if community not in declared:
                raise CorpusError(f"rule {pattern!r} maps to undeclared community {community!r}")
            if not pattern or pattern == "=":
                raise CorpusError("empty venue pattern")
        object.__setattr__(self, "_compiled", tuple(_compile_rule(p) for p, _ in self.rules))

    def match(self, venue: str | None) -> str | None:
        if not venue:
            return None
        v = venue.strip().lower()
        for (exact, pat), (_, community) in zip(self._compiled, self.rules):  # type: ignore[attr-defined]
            if (v == pat) if exact else (pat in v):
                return community
        return None


def _compile_rule(pattern: str) -> tuple[bool, str]:
    if pattern.startswith("="):
        return True, pattern[1:].strip().lower()
    return False, pattern.strip().lower()


def read_community_map(path: str | Path) -> CommunityMap:
    labels: tuple[str, ...] | None = None
    rules: list[tuple[str, str]] = []
    for lineno, line in _open_lines(path):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if labels is None:
            head, sep, rest = line.partition(":")
            if not sep or head.strip().lower() != "communities":
                raise CorpusError(f"{path}:{lineno}: expected 'communities: <labels>' header")
            labels = tuple(s.strip() for s in rest.split(",") if s.strip())
            if not labels:
                raise CorpusError(f"{path}:{lineno}: no community labels declared")
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise CorpusError(f"{path}:{lineno}: expected 'pattern<TAB>community'")
        rules.append((cols[0].strip(), cols[1].strip()))
    if labels is None:
        raise CorpusError(f"{path}: missing 'communities:' header")
    try:
        return CommunityMap(labels, tuple(rules))
    except CorpusError as exc:
        raise CorpusError(f"{path}: {exc}") from None


def write_community_map(path: str | Path, cmap: CommunityMap) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("communities: " + ", ".join(cmap.labels) + "\n")
        for pattern, community in cmap.rules:
            fh.write(f"{pattern}\t{community}\n")


def assign_communities(
    records: Sequence[RawRecord], cmap: CommunityMap
) -> list[tuple[RawRecord, str | None]]:
    return [(r, cmap.match(r.venue)) for r in records]


# --- cleaning ----------------------------------------------------------------


@dataclass(frozen=True)
class CleanPolicy:
    require_year: bool = True
    require_venue: bool = False
    year_range: tuple[int, int] | None = (1900, 2010)


@dataclass
class CleanReport:
    kept: int = 0
    missing_year: int = 0
    out_of_range: int = 0
    unresolved_venue: int = 0

    @property
    def removed(self) -> int:
        return self.missing_year + self.out_of_range + self.unresolved_venue


def clean(
    records: Sequence[RawRecord],
    policy: CleanPolicy = CleanPolicy(),
    cmap: CommunityMap | None = None,
) -> tuple[list[RawRecord], CleanReport]:
    """Drop records without a usable year or community; counts go in the report.

    Each record is charged to the first rule that removes it, checked in
    order year, range, venue.
    """
    if policy.require_venue and cmap is None:
        raise ValueError("require_venue needs a community map")
    report = CleanReport()
    out: list[RawRecord] = []
    for r in records:
        if r.year is None:
            if policy.require_year:
                report.missing_year += 1
                continue
        elif policy.year_range is not None and not (policy.year_range[0] <= r.year <= policy.year_range[1]):
            report.out_of_range += 1
            continue
        if policy.require_venue and cmap.match(r.venue) is None:  # type: ignore[union-attr]
            report.unresolved_venue += 1
            continue
        out.append(r)
    report.kept = len(out)
    return out, report


def restrict_edges(
    edges: Iterable[tuple[str, str]], records: Iterable[RawRecord]
) -> tuple[list[tuple[str, str]], int]:
    """Keep edges whose endpoints both survived cleaning."""
    alive = {r.external_id for r in records}
    kept: list[tuple[str, str]] = []
    dropped = 0
    for e in edges:
        if e[0] in alive and e[1] in alive:
            kept.append(e)
        else:
            dropped += 1
    return kept, dropped


# --- record linkage ----------------------------------------------------------

_PUNCT = re.compile(r"[^\w\s]", re.UNICODE)


def tokens(record: RawRecord) -> frozenset[str]:
    """Distinct normalized tokens of title plus authors."""
    text = " ".join((record.title, *record.authors)).lower()
    return frozenset(_PUNCT.sub("", text).split())


def cosine(a: frozenset[str], b: frozenset[str]) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / math.sqrt(len(a) * len(b))


def link_records(
    a: Sequence[RawRecord], b: Sequence[RawRecord], threshold: float = 0.9
) -> list[tuple[str, str, float]]:
    """Greedy one-to-one matching of records by token cosine similarity.

    Candidate pairs at or above ``threshold`` are taken in order of decreasing
    similarity; a record already matched is skipped.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    tok_b = [tokens(r) for r in b]
    index: dict[str, list[int]] = defaultdict(list)
    for j, tb in enumerate(tok_b):
        for t in tb:
            index[t].append(j)

    # (sort key, id_a, id_b, similarity); the key ignores which side an id came
    # from so that swapping the corpora yields the same matching
    cands: list[tuple[tuple, str, str, float]] = []
    for ra in a:
        ta = tokens(ra)
        if not ta:
            continue
        shared: dict[int, int] = defaultdict(int)
        for t in ta:
            for j in index.get(t, ()):
                shared[j] += 1
        for j, k in shared.items():
            sim = k / math.sqrt(len(ta) * len(tok_b[j]))
            if sim >= threshold - 1e-12:
                ib = b[j].external_id
                pair = tuple(sorted((ra.external_id, ib)))
                cands.append(((-round(sim, 12), pair), ra.external_id, ib, sim))
    cands.sort(key=lambda c: c[0])

    used_a: set[str] = set()
    used_b: set[str] = set()
    out: list[tuple[str, str, float]] = []
    for _, id_a, id_b, sim in cands:
        if id_a in used_a or id_b in used_b:
            continue
        used_a.add(id_a)
        used_b.add(id_b)
        out.append((id_a, id_b, sim))
    return out
