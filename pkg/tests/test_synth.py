from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.stats import chisquare, kstest

from citeflow.communities import count_matrix
from citeflow.graph import build_graph, time_violations
from citeflow.ingest import Kind, load_corpus, read_community_map
from citeflow.synth import GenConfig, ImpactCouplings, generate
from conftest import synth_graph


def test_homophily_one_has_no_cross_community_edges():
    m = count_matrix(synth_graph(GenConfig(n_nodes=3000, homophily=1.0, seed=1)))
    assert m.across == 0 and m.within > 0


def _uniformity_pvalue(seed: int, bins: int = 20) -> tuple[float, int]:
    """Chi-square of reference targets against a uniform choice among earlier papers."""
    cfg = GenConfig(n_nodes=30_000, refs_per_paper=3.5, pa_strength=0.0, recency_half_life=math.inf,
                    homophily=0.0, seed=seed)
    g = synth_graph(cfg)
    cited, citing = g.edge_arrays()
    pool = np.searchsorted(g.year, g.year, side="left")[citing]
    observed = np.bincount(cited * bins // pool, minlength=bins)
    expected = np.zeros(bins)
    for m, count in zip(*np.unique(pool, return_counts=True)):
        expected += count * np.bincount(np.arange(m) * bins // m, minlength=bins) / m
    return float(chisquare(observed, expected).pvalue), int(cited.size)


def test_targets_uniform_without_attachment_or_aging():
    results = [_uniformity_pvalue(seed) for seed in range(42, 62)]
    pvalues = np.array([p for p, _ in results])
    assert min(n for _, n in results) >= 100_000
    # each seed is a test at alpha = 0.01; under the null about 0.2 of 20 reject
    assert int((pvalues < 0.01).sum()) <= 2
    assert kstest(pvalues, "uniform").pvalue >= 0.01


def test_same_seed_byte_identical(tmp_path):
    cfg = GenConfig(n_nodes=2000, book_fraction=0.1, seed=42)
    a, b = generate(cfg).write(tmp_path / "a"), generate(cfg).write(tmp_path / "b")
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes()
    c = generate(GenConfig(n_nodes=2000, book_fraction=0.1, seed=43)).write(tmp_path / "c")
    assert c["edges"].read_bytes() != a["edges"].read_bytes()


def test_output_round_trips_through_ingest(tmp_path):
    corpus = generate(GenConfig(n_nodes=500, seed=2))
    paths = corpus.write(tmp_path)
    loaded = load_corpus(paths["nodes"], paths["edges"])
    cmap = read_community_map(paths["communities"])
    assert loaded.records == corpus.records and loaded.edges == corpus.edges and cmap == corpus.cmap
    g, _ = build_graph(loaded.records, loaded.edges, cmap)
    assert (g.community >= 0).all()


@pytest.mark.parametrize("seed", [0, 1, 42])
def test_no_time_violations(seed):
    assert time_violations(synth_graph(GenConfig(n_nodes=3000, seed=seed))) == []


def test_first_year_references_are_clipped():
    corpus = generate(GenConfig(n_nodes=1000, seed=5))
    assert corpus.report.clipped_refs > 0
    g, _ = build_graph(corpus.records, corpus.edges, corpus.cmap)
    first = g.year == g.year.min()
    assert g.in_degree[first].sum() == 0


def test_homophily_increases_diagonal_mass():
    levels = (0.0, 0.3, 0.6, 0.9)
    mass = []
    for h in levels:
        shares = []
        for seed in range(20):
            m = count_matrix(synth_graph(GenConfig(n_nodes=1500, homophily=h, seed=seed)))
            shares.append(m.within / m.total)
        mass.append(np.mean(shares))
    assert all(b > a for a, b in zip(mass, mass[1:]))


def test_books_make_more_references():
    g = synth_graph(GenConfig(n_nodes=5000, book_fraction=0.2, seed=3))
    books = g.kind == Kind.BOOK
    assert books.any() and g.in_degree[books].mean() > 2 * g.in_degree[~books].mean()


def test_planted_couplings_change_output():
    base = generate(GenConfig(n_nodes=1000, seed=4))
    planted = generate(GenConfig(n_nodes=1000, seed=4, impact_couplings=ImpactCouplings(weight_effect=2.0)))
    # attributes come from their own stream and do not move
    assert [r.year for r in base.records] == [r.year for r in planted.records]
    assert base.edges != planted.edges


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n_nodes": 3, "n_communities": 5},
        {"years": (2000, 1990)},
        {"homophily": 1.5},
        {"book_fraction": -0.1},
        {"refs_per_paper": -1.0},
        {"recency_half_life": 0.0},
        {"seed": -1},
    ],
)
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        GenConfig(**kwargs)
