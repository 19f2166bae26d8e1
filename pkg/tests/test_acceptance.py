"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the verdict lines are
collected in the "acceptance criteria" section of the terminal summary.
"""

from __future__ import annotations

import itertools
import json
import math
import resource
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from citeflow.cascades import all_cascades
from citeflow.communities import community_weights, count_matrix, weight_matrix
from citeflow.impact import edge_study, normalized_impact, overall_correlations
from citeflow.rankstats import pearson, spearman
from citeflow.structure import components, geodesics, top_cited_subgraph
from citeflow.synth import GenConfig, ImpactCouplings
from conftest import make_graph, pa_config, synth_graph
from oracles import (
    all_pairs_bfs,
    cascade_oracle,
    connected_dags,
    exhaustive_pvalue,
    largest_wcc_fraction,
    naive_pearson,
    naive_spearman,
)


def _relabel(n, edges, rng):
    perm = rng.permutation(n)
    return [(int(perm[u]), int(perm[v])) for u, v in edges], perm


def _cascades_match(n, edges) -> bool:
    t = all_cascades(make_graph(n, edges))
    got = list(zip(t.size.tolist(), t.depth.tolist(), t.leaves.tolist()))
    return got == cascade_oracle(n, edges)


def test_ac1_cascade_oracle(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    checked = mismatches = 0
    # every connected DAG shape on up to 6 nodes, presented under a random
    # labelling so ids are not a topological order
    for n in range(1, 7):
        for edges in connected_dags(n):
            relabeled, _ = _relabel(n, edges, rng)
            checked += 1
            mismatches += not _cascades_match(n, relabeled)
    exhaustive = checked
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(1, 13))
        p = float(rng.uniform(0.05, 0.6))
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
        relabeled, _ = _relabel(n, edges, rng)
        checked += 1
        mismatches += not _cascades_match(n, relabeled)
    secs = time.perf_counter() - t0
    ok = mismatches == 0 and secs < 60
    verdict("AC1", "cascade oracle", ok,
            f"{exhaustive} exhaustive + 1000 random DAGs, {mismatches} mismatches, {secs:.1f}s (limit 60s)")
    assert ok


def test_ac2_community_weight_identities(verdict):
    rng = np.random.default_rng(7)
    worst = 0.0
    absent_ok = True
    for _ in range(500):
        c = int(rng.integers(1, 31))
        counts = rng.integers(0, 1000, size=(c, c)) * (rng.random((c, c)) < rng.uniform(0.2, 1.0))
        if rng.random() < 0.3 and c > 1:
            counts[rng.integers(c)] = 0  # an empty row exercises absent cells
        if counts.sum() == 0:
            counts[0, 0] = 1
        w = weight_matrix(counts)
        e = np.outer(counts.sum(1), counts.sum(0)) / counts.sum()
        contrib = np.where(e > 0, np.nan_to_num(w) * np.sqrt(e), 0.0)
        worst = max(worst, np.abs(contrib.sum(1)).max(), np.abs(contrib.sum(0)).max())
        absent_ok &= bool(np.array_equal(np.isnan(w), e == 0))
    uniform = np.abs(weight_matrix(np.full((4, 4), 5))).max()
    z = 3 / math.sqrt(5)
    fixture = np.abs(weight_matrix(np.array([[8, 2], [2, 8]])) - np.array([[z, -z], [-z, z]])).max()
    ok = worst <= 1e-9 and absent_ok and uniform == 0.0 and fixture <= 1e-12
    verdict("AC2", "community-weight identities", ok,
            f"max |row/col sum| {worst:.2e} (tol 1e-9), uniform max|W| {uniform:.1e}, "
            f"[[8,2],[2,8]] error {fixture:.1e} (tol 1e-12)")
    assert ok


def test_ac3_rank_stats_oracle(verdict):
    rng = np.random.default_rng(11)
    worst = 0.0
    cube_exact = True
    for i in range(1000):
        n = int(rng.integers(3, 201))
        if i % 2:
            x = rng.integers(0, max(2, n // 4), size=n).astype(float)  # heavy ties
            y = rng.integers(0, 5, size=n).astype(float)
        else:
            x = rng.normal(size=n)
            y = 0.3 * x + rng.normal(size=n)
        s, p = spearman(x, y), pearson(x, y)
        if s is not None:
            worst = max(worst, abs(s.value - naive_spearman(x.tolist(), y.tolist())))
            c = spearman(x**3, y)
            cube_exact &= c.value == s.value and c.p_value == s.p_value
        if p is not None:
            worst = max(worst, abs(p.value - naive_pearson(x.tolist(), y.tolist())))
    perm_checked = perm_mismatch = 0
    # every ordering for n <= 5, ten random ones each for n = 6, 7, 8
    small = [(n, list(perm)) for n in range(3, 6) for perm in itertools.permutations(range(n))]
    large = [(n, rng.permutation(n).tolist()) for n in range(6, 9) for _ in range(10)]
    for n, order in small + large:
        x = np.arange(n, dtype=float)
        y = np.asarray(order, dtype=float)
        res = spearman(x, y)
        perm_checked += 1
        perm_mismatch += res.p_value != exhaustive_pvalue(x.tolist(), y.tolist())
    ok = worst <= 1e-12 and perm_mismatch == 0 and cube_exact
    verdict("AC3", "rank-stats oracle", ok,
            f"max deviation {worst:.1e} over 1000 vectors (tol 1e-12), {perm_checked} exact permutation "
            f"p-values with {perm_mismatch} mismatches, cube invariance exact: {cube_exact}")
    assert ok


NORMALIZATION_MATRIX = {
    "default seed 42": GenConfig(seed=42),
    "preferential attachment": pa_config(),
    "books and planted effects": GenConfig(n_nodes=8000, book_fraction=0.1, seed=5,
                                           impact_couplings=ImpactCouplings(1.0, -0.15, 0.5)),
    "full homophily": GenConfig(n_nodes=5000, homophily=1.0, seed=6),
    "many communities": GenConfig(n_nodes=8000, n_communities=26, seed=7),
    "short range, sparse": GenConfig(n_nodes=3000, years=(1990, 1995), refs_per_paper=1.0, seed=8),
}


def test_ac4_normalization_identity(verdict):
    worst = 0.0
    cells = 0
    for cfg in NORMALIZATION_MATRIX.values():
        imp = normalized_impact(synth_graph(cfg))
        ok_rows = imp.defined
        _, cell = np.unique(imp.community[ok_rows] * 10_000 + imp.year[ok_rows], return_inverse=True)
        means = np.bincount(cell, weights=imp.normalized[ok_rows]) / np.bincount(cell)
        worst = max(worst, float(np.abs(means - 1).max()))
        cells += means.size
    ok = worst <= 1e-9
    verdict("AC4", "normalization identity", ok,
            f"{len(NORMALIZATION_MATRIX)} corpora, {cells} cells, max |mean - 1| = {worst:.1e} (tol 1e-9)")
    assert ok


def test_ac5_planted_effect_recovery(verdict):
    t0 = time.perf_counter()
    cfg = GenConfig(n_nodes=100_000, seed=42, book_fraction=0.05,
                    impact_couplings=ImpactCouplings(weight_effect=1.0, recency_effect=-0.15))
    g = synth_graph(cfg)
    m = community_weights(count_matrix(g))
    res = overall_correlations(edge_study(g, m, normalized_impact(g)))
    secs = time.perf_counter() - t0
    td, cw = res["time_diff"], res["c_weight"]
    ok = td.value < 0 and td.p_value < 0.01 and cw.value > 0 and cw.p_value < 0.01 and secs < 300
    verdict("AC5", "planted-effect recovery", ok,
            f"rho(time_diff) = {td.value:+.4f} (p = {td.p_value:.1e}), rho(c_weight) = {cw.value:+.4f} "
            f"(p = {cw.p_value:.1e}), n = {td.n}, {secs:.1f}s (limit 300s)")
    assert ok


def test_ac6_structural_sanity(verdict):
    scc_ok = wcc_ok = geo_ok = True
    worst = 0.0
    cases = [GenConfig(n_nodes=5000, seed=s, refs_per_paper=r) for s, r in ((1, 3.4), (2, 1.0), (3, 6.0))]
    cases.append(GenConfig(n_nodes=2000, seed=4, homophily=1.0, n_communities=4))
    for cfg in cases:
        g = synth_graph(cfg)
        rep = components(g)
        scc_ok &= rep.largest_scc_size == 1
        wcc_ok &= rep.largest_wcc_fraction == largest_wcc_fraction(g.n_nodes, list(zip(*g.edge_arrays())))
        sampled = geodesics(g, sources=g.n_nodes, seed=0)
        pairs, total, longest = all_pairs_bfs(g.n_nodes, [g.successors(u).tolist() for u in range(g.n_nodes)])
        err = abs(sampled.mean_directed_distance - total / pairs)
        worst = max(worst, err)
        geo_ok &= sampled.reachable_pairs == pairs and sampled.max_observed == longest and err <= 1e-9
    ok = scc_ok and wcc_ok and geo_ok
    verdict("AC6", "structural sanity", ok,
            f"{len(cases)} DAGs up to 5000 nodes: largest SCC 1: {scc_ok}, WCC = union-find: {wcc_ok}, "
            f"k = n geodesics = all-pairs BFS: {geo_ok} (max error {worst:.1e}, tol 1e-9)")
    assert ok


def test_ac7_rich_club(verdict):
    wins = 0
    ratios = []
    for trial in range(100):
        g = synth_graph(pa_config(seed=1000 + trial))
        _, rep = top_cited_subgraph(g, 500, seed=trial)
        wins += rep.top_edges > rep.random_edges
        ratios.append(rep.top_edges / max(rep.random_edges, 1))
    ok = wins >= 95
    verdict("AC7", "rich-club property", ok,
            f"top-500 beats random-500 in {wins}/100 trials (need >= 95), median edge ratio {np.median(ratios):.1f}")
    assert ok


def _run_cli(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", "citeflow", *args], capture_output=True, text=True)


def _pipeline(base: Path, name: str) -> Path:
    corpus, out = base / f"{name}_corpus", base / f"{name}_out"
    synth = _run_cli("synth", "--out", str(corpus), "--seed", "42", "--book-fraction", "0.05",
                     "--weight-effect", "1.0", "--recency-effect", "-0.15")
    assert synth.returncode == 0, synth.stderr
    run = _run_cli("report", "--nodes", str(corpus / "nodes.tsv"), "--edges", str(corpus / "edges.tsv"),
                   "--communities", str(corpus / "communities.txt"), "--out", str(out), "--seed", "3")
    assert run.returncode == 0, run.stderr
    return out


def test_ac8_end_to_end_determinism(verdict, tmp_path):
    a, b = _pipeline(tmp_path, "a"), _pipeline(tmp_path, "b")
    names = sorted(p.name for p in a.iterdir() if not p.name.endswith(".manifest.json"))
    differing = [n for n in names if (a / n).read_bytes() != (b / n).read_bytes()]
    tables = [n for n in names if n.endswith((".csv", ".json"))]
    ok = not differing and len(tables) >= 10 and names == sorted(
        p.name for p in b.iterdir() if not p.name.endswith(".manifest.json")
    )
    verdict("AC8", "end-to-end determinism", ok,
            f"{len(names)} outputs compared ({len(tables)} CSV/JSON), differing: {differing or 'none'}")
    assert ok


@pytest.mark.slow
def test_ac9_scale(verdict, tmp_path):
    corpus, out = tmp_path / "corpus", tmp_path / "out"
    synth = _run_cli("synth", "--out", str(corpus), "--seed", "1", "--n-nodes", "250000",
                     "--n-communities", "26", "--refs-per-paper", "3.55")
    assert synth.returncode == 0, synth.stderr
    edges = json.loads((corpus / "synth.json").read_text())["report"]["edges"]
    t0 = time.perf_counter()
    run = _run_cli("report", "--nodes", str(corpus / "nodes.tsv"), "--edges", str(corpus / "edges.tsv"),
                   "--communities", str(corpus / "communities.txt"), "--out", str(out))
    secs = time.perf_counter() - t0
    # largest resident set of any child so far (KiB on Linux), an upper bound for this run
    peak_gb = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss / 2**20
    cascades = json.loads((out / "cascades.json").read_text())["roots"] if run.returncode == 0 else 0
    ok = run.returncode == 0 and cascades == 250_000 and 850_000 <= edges <= 875_000 and secs < 600 and peak_gb < 4
    verdict("AC9", "scale check", ok,
            f"250000 nodes / {edges} edges, {cascades} cascades, {secs:.1f}s (limit 600s), "
            f"peak RSS {peak_gb:.2f} GB (limit 4 GB)")
    assert ok, run.stderr


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
