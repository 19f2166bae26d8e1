from __future__ import annotations

import math

import numpy as np
import pytest

from citeflow.graph import CitationGraph, build_graph
from citeflow.ingest import Kind
from citeflow.synth import GenConfig, generate


def make_graph(n, edges, years=None, community=None, labels=("A", "B"), kinds=None) -> CitationGraph:
    """Graph on nodes 0..n-1 with (cited, citing) edges."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return CitationGraph(
        [f"n{i}" for i in range(n)],
        np.full(n, 2000) if years is None else years,
        np.zeros(n, dtype=np.int32) if community is None else community,
        labels,
        np.full(n, int(Kind.PAPER)) if kinds is None else kinds,
        e[:, 0],
        e[:, 1],
    )


def pa_config(seed: int = 42, n_nodes: int = 10_000) -> GenConfig:
    """Preferential-attachment fixture: linear attachment without aging."""
    return GenConfig(n_nodes=n_nodes, pa_strength=1.0, recency_half_life=math.inf, seed=seed)


def synth_graph(cfg: GenConfig) -> CitationGraph:
    corpus = generate(cfg)
    g, _ = build_graph(corpus.records, corpus.edges, corpus.cmap)
    return g


@pytest.fixture(scope="session")
def pa_graph() -> CitationGraph:
    return synth_graph(pa_config())


@pytest.fixture(scope="session")
def default_graph() -> CitationGraph:
    return synth_graph(GenConfig(seed=42))


@pytest.fixture
def verdict(record_property):
    """Record one acceptance line; the terminal summary prints them all."""

    def _verdict(code: str, title: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {code}  {title}: {detail}"
        record_property("acceptance", line)
        print(line)

    return _verdict


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" not in getattr(rep, "nodeid", "") or rep.when not in ("call", "setup"):
                continue
            recorded = [v for k, v in rep.user_properties if k == "acceptance"]
            if recorded:
                lines.extend(recorded)
            elif rep.failed:
                lines.append(f"FAIL  {rep.nodeid.split('::')[-1]}: raised before reaching a verdict")
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1][2:]) if s.split()[1][2:].isdigit() else 99):
            terminalreporter.write_line(line)
