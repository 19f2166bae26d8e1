"""Command line entry point: ``citeflow <command> [options]``.

Exit status is 0 on success, 1 for usage errors and 2 for bad input data.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from . import __version__, pipeline
from .impact import DEFAULT_ERAS, StudyFilter
from .ingest import CleanPolicy, CorpusError, Kind
from .structure import DEFAULT_GEODESIC_SOURCES
from .synth import GenConfig, ImpactCouplings

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _year_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split("-"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YEAR-YEAR, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return lo, hi


def _eras(text: str) -> tuple[tuple[int, int], ...]:
    return tuple(_year_range(part) for part in text.split(",") if part)


def _kinds(text: str) -> frozenset[Kind]:
    try:
        return frozenset(Kind.parse(t) for t in text.split(",") if t)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _optional_int(text: str) -> int | None:
    return None if text.lower() in ("none", "off") else int(text)


def _add_common(p: argparse.ArgumentParser, inputs: bool = True) -> None:
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--threads", type=int, default=None, help="worker threads for the parallel kernels")
    p.add_argument("--format", nargs="+", choices=pipeline.ALL_FORMATS, default=list(pipeline.ALL_FORMATS),
                   help="artifact formats; JSON summaries are always written")
    if not inputs:
        return
    p.add_argument("--nodes", type=Path, help="nodes TSV")
    p.add_argument("--edges", type=Path, help="edges TSV")
    p.add_argument("--communities", type=Path, help="venue to community map")
    p.add_argument("--graph", type=Path, help="graph snapshot from an earlier 'graph' run")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="strict", action="store_true", default=True,
                      help="reject malformed lines and dangling edges (default)")
    mode.add_argument("--lenient", dest="strict", action="store_false", help="skip and count them instead")
    p.add_argument("--year-range", type=_year_range, default=(1900, 2010), help="accepted years, e.g. 1900-2010")
    p.add_argument("--require-venue", action="store_true", help="drop records without a venue")


def _add_structure(p: argparse.ArgumentParser) -> None:
    p.add_argument("--geodesic-sources", type=_optional_int, default=DEFAULT_GEODESIC_SOURCES,
                   help="BFS sources for path lengths ('none' for exact all-pairs)")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled sources and the random baseline")
    p.add_argument("--seed-years", type=_year_range, default=None, help="backward-reach seed years (default: last two)")
    p.add_argument("--top-k", type=int, default=500, help="size of the most-cited subgraph")


def _add_impact(p: argparse.ArgumentParser) -> None:
    p.add_argument("--exclude-kinds", type=_kinds, default=StudyFilter().exclude_kinds,
                   help="comma separated kinds of citing documents to drop (default book,chapter)")
    p.add_argument("--max-refs", type=_optional_int, default=40,
                   help="drop citing papers with at least this many references ('none' to keep all)")
    p.add_argument("--max-year", type=_optional_int, default=2000, help="drop citing papers published later")
    p.add_argument("--eras", type=_eras, default=DEFAULT_ERAS, help="comma separated YEAR-YEAR ranges")
    p.add_argument("--quantile", type=float, default=0.9, help="impact split point")
    p.add_argument("--split-on", choices=("normalized", "raw"), default="normalized")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="citeflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    _add_common(p, inputs=False)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--n-nodes", type=int, default=GenConfig.n_nodes)
    p.add_argument("--years", type=_year_range, default=GenConfig.years)
    p.add_argument("--n-communities", type=int, default=GenConfig.n_communities)
    p.add_argument("--refs-per-paper", type=float, default=GenConfig.refs_per_paper)
    p.add_argument("--pa-strength", type=float, default=GenConfig.pa_strength)
    p.add_argument("--homophily", type=float, default=GenConfig.homophily)
    p.add_argument("--recency-half-life", type=float, default=GenConfig.recency_half_life, help="'inf' disables aging")
    p.add_argument("--book-fraction", type=float, default=GenConfig.book_fraction)
    p.add_argument("--book-refs-factor", type=float, default=GenConfig.book_refs_factor)
    p.add_argument("--weight-effect", type=float, default=0.0)
    p.add_argument("--recency-effect", type=float, default=0.0)
    p.add_argument("--weight-trend", type=float, default=0.0)

    for name, help_text in (("ingest", "clean and validate a corpus"), ("graph", "build and snapshot the citation graph")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)

    p = sub.add_parser("structure", help="degree, component, path and rich-club statistics")
    _add_common(p)
    _add_structure(p)

    p = sub.add_parser("cascades", help="cascade size, depth and leaves for every paper")
    _add_common(p)

    p = sub.add_parser("communities", help="citation counts and weights between communities")
    _add_common(p)

    p = sub.add_parser("impact", help="community weight and time span vs citing-paper impact")
    _add_common(p)
    _add_impact(p)

    p = sub.add_parser("report", help="run missing stages and write report.json and report.md")
    _add_common(p)
    _add_structure(p)
    _add_impact(p)
    p.add_argument("--force", action="store_true", help="recompute stages that already have results")
    return parser


def _policy(args: argparse.Namespace) -> CleanPolicy:
    return CleanPolicy(require_year=True, require_venue=args.require_venue, year_range=args.year_range)


def _need_inputs(args: argparse.Namespace) -> None:
    if args.nodes is None or args.edges is None:
        raise UsageError("the --nodes and --edges flags are required")


def _graph(args: argparse.Namespace, manifest: pipeline.Manifest):
    """Graph from --graph, from --nodes/--edges, or from a snapshot already in --out."""
    if args.graph is not None:
        manifest.add_input("graph", args.graph)
        return pipeline.open_graph(args.graph)
    if args.nodes is not None or args.edges is not None:
        _need_inputs(args)
        for name in ("nodes", "edges", "communities"):
            manifest.add_input(name, getattr(args, name))
        return pipeline.build_stage(args.nodes, args.edges, args.communities, strict=args.strict,
                                    policy=_policy(args), manifest=manifest)
    snapshot = args.out / "graph.cgrf"
    if snapshot.exists():
        manifest.add_input("graph", snapshot)
        return pipeline.open_graph(snapshot)
    raise UsageError("give --nodes and --edges, or --graph, or an --out holding a graph snapshot")


def _filter(args: argparse.Namespace) -> StudyFilter:
    return StudyFilter(exclude_kinds=args.exclude_kinds, max_refs=args.max_refs, max_year=args.max_year)


def _set_threads(n: int | None) -> None:
    if n is None:
        return
    if n < 1:
        raise UsageError("--threads must be positive")
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def run(args: argparse.Namespace) -> None:
    _set_threads(args.threads)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    cmd = args.command
    manifest = pipeline.Manifest(cmd, out)
    fmt = tuple(args.format)

    if cmd == "synth":
        cfg = GenConfig(
            n_nodes=args.n_nodes, years=args.years, n_communities=args.n_communities,
            refs_per_paper=args.refs_per_paper, pa_strength=args.pa_strength, homophily=args.homophily,
            recency_half_life=args.recency_half_life,
            impact_couplings=ImpactCouplings(args.weight_effect, args.recency_effect, args.weight_trend),
            book_fraction=args.book_fraction, book_refs_factor=args.book_refs_factor, seed=args.seed,
        )
        pipeline.run_synth(cfg, out, manifest)
    elif cmd == "ingest":
        _need_inputs(args)
        for name in ("nodes", "edges", "communities"):
            manifest.add_input(name, getattr(args, name))
        pipeline.run_ingest(args.nodes, args.edges, args.communities, out, strict=args.strict,
                            policy=_policy(args), manifest=manifest)
    elif cmd == "graph":
        _need_inputs(args)
        g, summary = _graph(args, manifest)
        pipeline.run_graph(g, summary, out, {"nodes": args.nodes, "edges": args.edges,
                                             "communities": args.communities})
    else:
        g, summary = _graph(args, manifest)
        if cmd == "report" and (args.force or not (out / "graph.json").exists()):
            pipeline.write_json(out / "graph.json", summary)
        if cmd in ("structure", "report") and _wanted(cmd, args, out, "structure"):
            pipeline.run_structure(g, out, fmt, geodesic_sources=args.geodesic_sources, seed=args.seed,
                                   seed_years=args.seed_years, top_k=args.top_k, manifest=manifest)
        if cmd in ("cascades", "report") and _wanted(cmd, args, out, "cascades"):
            pipeline.run_cascades(g, out, fmt, manifest)
        m = None
        if cmd in ("communities", "report") and _wanted(cmd, args, out, "communities"):
            m, _ = pipeline.run_communities(g, out, fmt, manifest)
        if cmd in ("impact", "report") and _wanted(cmd, args, out, "impact"):
            if m is None:
                from .communities import community_weights, count_matrix

                m = community_weights(count_matrix(g))
            pipeline.run_impact(g, m, out, fmt, filt=_filter(args), eras=args.eras, quantile=args.quantile,
                                split_on=args.split_on, manifest=manifest)
        if cmd == "report":
            pipeline.assemble_report(out)
    manifest.write()


def _wanted(cmd: str, args: argparse.Namespace, out: Path, stage: str) -> bool:
    return cmd != "report" or args.force or not (out / f"{stage}.json").exists()


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run(args)
    except UsageError as exc:
        sub = parser._subparsers._group_actions[0].choices[args.command]  # type: ignore[union-attr]
        sub.print_usage(sys.stderr)
        print(f"citeflow {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, ValueError, LookupError, OSError) as exc:
        print(f"citeflow {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0
