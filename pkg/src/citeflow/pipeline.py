"""Pipeline stages behind the command line.

Every stage writes its results into an output directory: a JSON summary
(always), CSV tables and SVG figures (when requested), and a
``<stage>.manifest.json`` sidecar holding the command, input hashes and
wall-clock time. Summaries contain nothing time-dependent, so identical
inputs and flags reproduce them byte for byte.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

import numpy as np

from . import __version__, svg
from .cascades import all_cascades, cascade_correlations, log_binned_distribution
from .communities import community_weights, count_matrix, export_heatmap, write_matrix_csv
from .graph import CitationGraph, build_graph, load_graph, save_graph, time_violations
from .impact import (
    DEFAULT_ERAS,
    StudyFilter,
    books_study,
    by_community_correlations,
    by_era_correlations,
    edge_study,
    normalized_impact,
    overall_correlations,
    result_row,
    split_correlations,
)
from .ingest import (
    CleanPolicy,
    CommunityMap,
    Kind,
    clean,
    load_corpus,
    read_community_map,
    restrict_edges,
    write_edges,
    write_nodes,
)
from .rankstats import CorrelationResult
from .structure import (
    DEFAULT_GEODESIC_SOURCES,
    backward_reach_fraction,
    components,
    degree_histogram,
    geodesics,
    top_cited_subgraph,
)
from .synth import GenConfig, generate

ALL_FORMATS = ("csv", "json", "svg")
STAGES = ("graph", "structure", "cascades", "communities", "impact")


# --- serialization helpers ----------------------------------------------------


def jsonable(obj: Any) -> Any:
    if isinstance(obj, CorrelationResult):
        return obj.to_dict()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(obj.to_dict() if hasattr(obj, "to_dict") else dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return None if math.isnan(f) or math.isinf(f) else f
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path: Path, data: Any) -> None:
    path.write_text(json.dumps(jsonable(data), indent=2) + "\n", encoding="utf-8")


def read_json(path: Path) -> Any:
    return json.loads(path.read_text(encoding="utf-8"))


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    """Run provenance for one stage; the only output carrying wall-clock data."""

    def __init__(self, stage: str, out: Path, argv: Sequence[str] | None = None) -> None:
        self.stage = stage
        self.out = out
        self.data: dict[str, Any] = {
            "stage": stage,
            "command": list(sys.argv if argv is None else argv),
            "version": __version__,
            "inputs": {},
            "settings": {},
            "seconds": {},
        }

    def add_input(self, name: str, path: str | Path | None) -> None:
        if path is not None:
            self.data["inputs"][name] = {"path": str(path), "sha256": sha256_file(path)}

    def setting(self, **kw: Any) -> None:
        self.data["settings"].update(jsonable(kw))

    @contextmanager
    def timed(self, step: str) -> Iterator[None]:
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.data["seconds"][step] = round(time.perf_counter() - t0, 4)

    def write(self) -> Path:
        path = self.out / f"{self.stage}.manifest.json"
        write_json(path, self.data)
        return path


# --- synth / ingest / graph ---------------------------------------------------


@contextmanager
def _timed(manifest: Manifest | None, step: str) -> Iterator[None]:
    if manifest is None:
        yield
    else:
        with manifest.timed(step):
            yield


def run_synth(cfg: GenConfig, out: Path, manifest: Manifest | None = None) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    with _timed(manifest, "generate"):
        corpus = generate(cfg)
    with _timed(manifest, "write"):
        paths = corpus.write(out)
    summary = {
        "config": dataclasses.asdict(cfg),
        "report": dataclasses.asdict(corpus.report),
        "files": {k: p.name for k, p in paths.items()},
    }
    write_json(out / "synth.json", summary)
    if manifest:
        manifest.setting(seed=cfg.seed)
    return summary


def ingest(
    nodes: Path,
    edges: Path,
    communities: Path | None,
    *,
    strict: bool = True,
    policy: CleanPolicy = CleanPolicy(),
) -> tuple[list, list, CommunityMap | None, dict]:
    corpus = load_corpus(nodes, edges, strict=strict)
    cmap = read_community_map(communities) if communities else None
    kept, report = clean(corpus.records, policy, cmap)
    kept_edges, cleaned_edges = restrict_edges(corpus.edges, kept)
    summary = {
        "original": {"nodes": len(corpus.records), "edges": len(corpus.edges) + corpus.dropped_edges},
        "dangling_edges_dropped": corpus.dropped_edges,
        "clean": dataclasses.asdict(report),
        "edges_dropped_by_cleaning": cleaned_edges,
        "kept": {"nodes": len(kept), "edges": len(kept_edges)},
        "policy": dataclasses.asdict(policy),
    }
    return kept, kept_edges, cmap, summary


def run_ingest(nodes: Path, edges: Path, communities: Path | None, out: Path, *, strict: bool, policy: CleanPolicy,
               manifest: Manifest | None = None) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    with _timed(manifest, "ingest"):
        recs, kept_edges, _, summary = ingest(nodes, edges, communities, strict=strict, policy=policy)
    write_nodes(out / "clean_nodes.tsv", sorted(recs, key=lambda r: r.external_id))
    write_edges(out / "clean_edges.tsv", sorted(kept_edges))
    write_json(out / "ingest.json", summary)
    return summary


def corpus_summary(g: CitationGraph, original: dict | None) -> dict:
    labeled = g.community >= 0
    src, dst = g.edge_arrays()
    both = labeled[src] & labeled[dst]
    years = (int(g.year.min()), int(g.year.max())) if g.n_nodes else None
    return {
        "original": original,
        "with_date": {"nodes": g.n_nodes, "edges": g.n_edges, "time_range": years},
        "with_venue": {
            "nodes": int(labeled.sum()),
            "edges": int(both.sum()),
            "communities": int(np.unique(g.community[labeled]).size),
        },
    }


def build_stage(
    nodes: Path,
    edges: Path,
    communities: Path | None,
    *,
    strict: bool = True,
    policy: CleanPolicy = CleanPolicy(),
    manifest: Manifest | None = None,
) -> tuple[CitationGraph, dict]:
    with _timed(manifest, "ingest"):
        recs, kept_edges, cmap, ing = ingest(nodes, edges, communities, strict=strict, policy=policy)
    with _timed(manifest, "build"):
        g, rep = build_graph(recs, kept_edges, cmap, year_range=policy.year_range, strict=strict)
    violations = time_violations(g)
    summary = {
        "ingest": ing,
        "build": rep.to_dict(),
        "time_violations": len(violations),
        "near_dag_clean": not violations,
        "corpus_summary": corpus_summary(g, ing["original"]),
    }
    return g, summary


def run_graph(g: CitationGraph, summary: dict, out: Path, inputs: dict[str, Path | None]) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    provenance = {
        "inputs": {k: sha256_file(p) for k, p in inputs.items() if p is not None},
        "build": summary["build"],
        "ingest": summary["ingest"],
    }
    save_graph(out / "graph.cgrf", g, provenance)
    write_json(out / "graph.json", summary)
    return summary


def open_graph(path: Path) -> tuple[CitationGraph, dict]:
    """Load a snapshot and the stage summary written next to it, if any."""
    g = load_graph(path)
    summary_path = path.with_name("graph.json")
    summary = read_json(summary_path) if summary_path.exists() else {"corpus_summary": corpus_summary(g, None)}
    return g, summary


# --- analyses -----------------------------------------------------------------


def _hist_rows(h) -> list:
    return [(lo, c, f"{f:.9f}") for lo, c, f in h.bins]


def run_structure(
    g: CitationGraph,
    out: Path,
    formats: Sequence[str] = ALL_FORMATS,
    *,
    geodesic_sources: int | None = DEFAULT_GEODESIC_SOURCES,
    seed: int = 0,
    seed_years: tuple[int, int] | None = None,
    top_k: int = 500,
    manifest: Manifest | None = None,
) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    groups = {"all": None, "papers": (Kind.PAPER,), "books": (Kind.BOOK, Kind.CHAPTER)}
    hists: dict[str, Any] = {}
    with _timed(manifest, "degrees"):
        for direction in ("in", "out"):
            for name, kinds in groups.items():
                hists[f"{direction}_{name}"] = degree_histogram(g, direction, kinds, "exact")
    if "csv" in formats:
        for key, h in hists.items():
            write_csv(out / f"degree_{key}.csv", ("degree", "count", "fraction"), _hist_rows(h))
    if "svg" in formats:
        for direction in ("in", "out"):
            series = {
                name: ([lo for lo, _, _ in hists[f"{direction}_{name}"].bins],
                       [f for _, _, f in hists[f"{direction}_{name}"].bins])
                for name in ("papers", "books")
                if hists[f"{direction}_{name}"].bins
            }
            (out / f"degree_{direction}.svg").write_text(
                svg.loglog_scatter(series, f"{direction}-degree", "fraction of nodes", f"{direction}-degree distribution"),
                encoding="utf-8",
            )

    with _timed(manifest, "components"):
        comp = components(g)
    reach = None
    if g.n_nodes:
        y_hi = int(g.year.max())
        sy = seed_years or (y_hi - 1, y_hi)
        try:
            reach = {"seed_years": sy, "fraction": backward_reach_fraction(g, sy),
                     "seed_share": float(np.mean((g.year >= sy[0]) & (g.year <= sy[1])))}
        except ValueError as exc:
            reach = {"seed_years": sy, "fraction": None, "error": str(exc)}
    with _timed(manifest, "geodesics"):
        geo = geodesics(g, sources=geodesic_sources, seed=seed)
    k = min(top_k, g.n_nodes)
    with _timed(manifest, "rich_club"):
        _, club = top_cited_subgraph(g, k, seed=seed)

    summary = {
        "degree_summary": {
            key: {"nodes": h.total, "max": h.bins[-1][0] if h.bins else None,
                  "zero_fraction": h.bins[0][2] if h.bins and h.bins[0][0] == 0 else 0.0}
            for key, h in hists.items()
        },
        "components": comp,
        "backward_reach": reach,
        "geodesics": geo,
        "rich_club": club,
    }
    write_json(out / "structure.json", summary)
    if manifest:
        manifest.setting(geodesic_sources=geodesic_sources, seed=seed, seed_years=seed_years, top_k=top_k)
    return summary


def run_cascades(g: CitationGraph, out: Path, formats: Sequence[str] = ALL_FORMATS,
                 manifest: Manifest | None = None) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    with _timed(manifest, "cascades"):
        table = all_cascades(g)
    corr = cascade_correlations(table, g.out_degree) if len(table) >= 3 else {}
    dists = {name: log_binned_distribution(getattr(table, name)) for name in ("size", "depth", "leaves")}
    if "csv" in formats:
        write_csv(out / "cascades.csv", ("root", "size", "depth", "leaves"),
                  ((g.external_ids[r], s, d, l) for r, s, d, l in table.csv_rows()))
        write_csv(out / "cascade_distributions.csv", ("quantity", "bin_lower", "count", "density"),
                  ((name, lo, c, f"{dens:.9f}") for name, rows in dists.items() for lo, c, dens in rows))
    if "svg" in formats:
        series = {name: ([max(lo, 1) for lo, _, _ in rows], [d for _, _, d in rows]) for name, rows in dists.items()}
        (out / "cascade_distributions.svg").write_text(
            svg.loglog_scatter(series, "value", "count per unit", "cascade size, depth and leaves"), encoding="utf-8"
        )
    n = max(g.n_nodes, 1)
    summary = {
        "roots": len(table),
        "mean_size": float(table.size.mean()) if len(table) else None,
        "max_size": int(table.size.max()) if len(table) else None,
        "max_depth": int(table.depth.max()) if len(table) else None,
        "max_leaves": int(table.leaves.max()) if len(table) else None,
        "reachable_pair_fraction": float((table.size - 1).sum()) / (n * (n - 1)) if n > 1 else 0.0,
        "correlations": corr,
        "distributions": dists,
    }
    write_json(out / "cascades.json", summary)
    return summary


def run_communities(g: CitationGraph, out: Path, formats: Sequence[str] = ALL_FORMATS,
                    manifest: Manifest | None = None):
    out.mkdir(parents=True, exist_ok=True)
    with _timed(manifest, "communities"):
        m = community_weights(count_matrix(g))
    if "csv" in formats:
        write_matrix_csv(out / "community_counts.csv", m.labels, m.counts.astype(np.float64), "{:.0f}")
        write_matrix_csv(out / "community_weights.csv", m.labels, m.weights)
    if "svg" in formats:
        export_heatmap(m, out / "community_weights.svg")
    summary = {
        "labels": m.labels,
        "total": m.total,
        "within": m.within,
        "across": m.across,
        "dropped_edges": m.dropped_edges,
        "counts": m.counts,
        "weights": m.weights,
    }
    write_json(out / "communities.json", summary)
    return m, summary


def run_impact(
    g: CitationGraph,
    m,
    out: Path,
    formats: Sequence[str] = ALL_FORMATS,
    *,
    filt: StudyFilter = StudyFilter(),
    eras: Sequence[tuple[int, int]] = DEFAULT_ERAS,
    quantile: float = 0.9,
    split_on: str = "normalized",
    manifest: Manifest | None = None,
) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    with _timed(manifest, "impact"):
        imp = normalized_impact(g)
        table = edge_study(g, m, imp, filt)
    if "csv" in formats:
        table.write_csv(out / "edge_study.csv", g)

    results: list[dict] = []
    overall = overall_correlations(table) if len(table) >= 3 else {"time_diff": None, "c_weight": None}
    for key, res in overall.items():
        results.append({**result_row(f"overall/{key}", res, len(table))})
    try:
        split = split_correlations(table, quantile, split_on)
    except ValueError as exc:
        split = {"error": str(exc)}
    for part in ("bottom", "top"):
        if part in split:
            for key in ("time_diff", "c_weight"):
                results.append(result_row(f"{part}/{key}", split[part][key], split[part]["rows"]))
    by_comm = by_community_correlations(table, g)
    for row in by_comm:
        results.append(result_row(f"community/{row['community']}", row["c_weight"], row["rows"]))
    by_era = by_era_correlations(table, eras)
    for row in by_era:
        lo, hi = row["era"]
        results.append(result_row(f"era/{lo}-{hi}", row["c_weight_log_impact"], row["rows"]))
    books = books_study(g)
    for key in ("books", "papers"):
        results.append(result_row(f"time_span/{key}", books[key]["time_span"], books[key]["edges"]))

    defined = imp.defined
    summary = {
        "filter": filt.to_dict(),
        "impacts": {"labeled": len(imp), "defined": int(defined.sum()), "excluded_zero_mean": int((~defined).sum())},
        "rows": len(table),
        "dropped": table.dropped,
        "overall": overall,
        "split": split,
        "by_community": by_comm,
        "by_era": by_era,
        "books": books,
        "results": results,
    }
    write_json(out / "impact.json", summary)
    if manifest:
        manifest.setting(filter=filt.to_dict(), eras=eras, quantile=quantile, split_on=split_on)
    return summary


# --- report -------------------------------------------------------------------


def _fmt(x: Any, digits: int = 4) -> str:
    if x is None:
        return "n/a"
    if isinstance(x, float):
        return f"{x:.{digits}f}"
    return str(x)


def _corr_cell(res: dict | None) -> str:
    if not res:
        return "n/a"
    p = res.get("p")
    return f"{res['value']:.4f} (p={p:.2g})" if p is not None else f"{res['value']:.4f}"


def assemble_report(out: Path) -> dict:
    """Combine the stage summaries found in ``out`` into report.json and report.md."""
    parts = {s: read_json(out / f"{s}.json") for s in STAGES if (out / f"{s}.json").exists()}
    report = {
        "corpus_summary": parts.get("graph", {}).get("corpus_summary"),
        "degree_distributions": parts.get("structure", {}).get("degree_summary"),
        "connectivity": {k: parts.get("structure", {}).get(k) for k in ("components", "backward_reach", "geodesics", "rich_club")},
        "cascade_correlations": parts.get("cascades", {}).get("correlations"),
        "cascade_distributions": parts.get("cascades", {}).get("distributions"),
        "community_flow": {k: parts.get("communities", {}).get(k) for k in ("labels", "within", "across", "weights")},
        "impact_correlations": {"overall": parts.get("impact", {}).get("overall"), "split": parts.get("impact", {}).get("split")},
        "impact_by_community": parts.get("impact", {}).get("by_community"),
        "impact_by_era": parts.get("impact", {}).get("by_era"),
        "books": parts.get("impact", {}).get("books"),
        "results": parts.get("impact", {}).get("results"),
    }
    write_json(out / "report.json", report)
    (out / "report.md").write_text(render_markdown(report), encoding="utf-8")
    return report


def render_markdown(r: dict) -> str:
    lines = ["# Citation network report", ""]
    t1 = r.get("corpus_summary")
    if t1:
        orig = t1.get("original") or {}
        wd, wv = t1["with_date"], t1["with_venue"]
        tr = wd.get("time_range") or ("?", "?")
        lines += [
            "## Corpus summary", "",
            "| Orig. nodes | Orig. edges | Dated nodes | Dated edges | Time range | Venue nodes | Venue edges | Communities |",
            "|---|---|---|---|---|---|---|---|",
            f"| {orig.get('nodes', 'n/a')} | {orig.get('edges', 'n/a')} | {wd['nodes']} | {wd['edges']} | "
            f"{tr[0]} - {tr[1]} | {wv['nodes']} | {wv['edges']} | {wv['communities']} |",
            "",
        ]
    conn = r.get("connectivity") or {}
    if conn.get("components"):
        c, geo, reach, club = conn["components"], conn.get("geodesics") or {}, conn.get("backward_reach") or {}, conn.get("rich_club") or {}
        lines += [
            "## Connectivity", "",
            f"- strongly connected components: {c['scc_count']} (largest {c['largest_scc_size']})",
            f"- largest weakly connected component: {100 * c['largest_wcc_fraction']:.2f}% of nodes",
            f"- backward reach from {reach.get('seed_years')}: {_fmt(reach.get('fraction'))}",
            f"- mean shortest directed path: {_fmt(geo.get('mean_directed_distance'), 2)}, longest observed "
            f"{geo.get('max_observed')}, reachable ordered pairs {100 * (geo.get('reachable_pair_fraction') or 0):.3f}% "
            f"({geo.get('method')}, {geo.get('sources')} sources)",
            f"- top-{club.get('k')} cited subgraph: {club.get('top_edges')} edges vs {club.get('random_edges')} among random papers",
            "",
        ]
    t2 = r.get("cascade_correlations")
    if t2:
        lines += ["## Cascade correlations (Spearman)", "", "| " + " | ".join(t2) + " |",
                  "|" + "---|" * len(t2), "| " + " | ".join(_corr_cell(v) for v in t2.values()) + " |", ""]
    f4 = r.get("community_flow") or {}
    if f4.get("labels"):
        lines += ["## Community flow", "", f"- within-community citations: {f4['within']}",
                  f"- cross-community citations: {f4['across']}", "- weights: community_weights.csv / .svg", ""]
    t3 = r.get("impact_correlations") or {}
    if t3.get("overall"):
        split = t3.get("split") or {}
        bottom, top = split.get("bottom") or {}, split.get("top") or {}
        lines += ["## Citation features vs citing-paper impact (Spearman)", "",
                  f"| | Overall | <= {int(100 * split.get('quantile', 0.9))}% | > {int(100 * split.get('quantile', 0.9))}% |",
                  "|---|---|---|---|"]
        for key, name in (("time_diff", "time-diff"), ("c_weight", "c-weight")):
            lines.append(f"| {name} | {_corr_cell(t3['overall'].get(key))} | {_corr_cell(bottom.get(key))} | "
                         f"{_corr_cell(top.get(key))} |")
        lines.append("")
    t4 = r.get("impact_by_community")
    if t4:
        lines += ["## By community (citing paper)", "", "| Community | Share | Rows | c-weight |", "|---|---|---|---|"]
        for row in t4:
            if row["major"]:
                lines.append(f"| {row['community']} | {100 * row['share']:.2f}% | {row['rows']} | {_corr_cell(row['c_weight'])} |")
        lines.append("")
    f6 = r.get("impact_by_era")
    if f6:
        lines += ["## By era: Pearson r of c-weight vs log impact", "", "| Era | Rows | r | 95% CI |", "|---|---|---|---|"]
        for row in f6:
            res = row["c_weight_log_impact"]
            ci = f"[{res['ci_low']:.4f}, {res['ci_high']:.4f}]" if res and res.get("ci_low") is not None else "n/a"
            lines.append(f"| {row['era'][0]}-{row['era'][1]} | {row['rows']} | {_fmt(res['value'] if res else None)} | {ci} |")
        lines.append("")
    books = r.get("books")
    if books:
        lines += ["## Time span vs citation count of the citing document", "",
                  f"- books and chapters: {_corr_cell(books['books']['time_span'])} over {books['books']['edges']} citations",
                  f"- papers: {_corr_cell(books['papers']['time_span'])} over {books['papers']['edges']} citations", ""]
    return "\n".join(lines)
