from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from citeflow.cascades import (
    CascadeStats,
    all_cascades,
    cascade_correlations,
    cascade_from,
    log_binned_distribution,
)
from conftest import make_graph, synth_graph
from citeflow.synth import GenConfig
from oracles import cascade_oracle, closure

DIAMOND = [(0, 1), (0, 2), (1, 3), (2, 3)]


def test_chain():
    g = make_graph(3, [(0, 1), (1, 2)])
    assert cascade_from(g, 0) == CascadeStats(0, 3, 2, 1)
    assert all_cascades(g).size.tolist() == [3, 2, 1]


def test_diamond():
    assert cascade_from(make_graph(4, DIAMOND), 0) == CascadeStats(0, 4, 2, 1)


def test_isolated_node():
    g = make_graph(3, [])
    assert cascade_from(g, 1) == CascadeStats(1, 1, 0, 1)
    t = all_cascades(g)
    assert len(t) == 3 and t.size.tolist() == [1, 1, 1]


def test_unknown_root():
    with pytest.raises(IndexError):
        cascade_from(make_graph(2, []), 2)
    with pytest.raises(IndexError):
        all_cascades(make_graph(2, []), roots=[5])


def test_violations_dropped_by_default():
    g = make_graph(2, [(0, 1)], years=np.array([2001, 2000]))
    assert all_cascades(g).size.tolist() == [1, 1]
    assert all_cascades(g, drop_violations=False).size.tolist() == [2, 1]


def test_chain_correlations():
    g = make_graph(3, [(0, 1), (1, 2)])
    corr = cascade_correlations(all_cascades(g), g.out_degree)
    assert corr["size~depth"].value == pytest.approx(1.0, abs=1e-15)
    # out-degrees [1, 1, 0] tie, so the rank correlation with sizes [3, 2, 1] is sqrt(3)/2
    assert corr["size~outdeg"].value == pytest.approx(math.sqrt(3) / 2, abs=1e-15)
    # every chain member is its own cascade's only leaf: constant column
    assert corr["size~leaves"] is None and corr["depth~leaves"] is None


def test_isolated_correlations_absent():
    g = make_graph(4, [])
    assert all(v is None for v in cascade_correlations(all_cascades(g), g.out_degree).values())
    with pytest.raises(ValueError):
        cascade_correlations(all_cascades(make_graph(2, [])), np.zeros(2))


dag_edges = st.lists(st.tuples(st.integers(0, 11), st.integers(0, 11)), max_size=40).map(
    lambda es: sorted({(min(a, b), max(a, b)) for a, b in es if a != b})
)


@settings(max_examples=150, deadline=None)
@given(dag_edges)
def test_methods_agree_with_oracle(edges):
    g = make_graph(12, edges)
    expected = cascade_oracle(12, edges)
    for method in ("bitset", "scalar"):
        t = all_cascades(g, method=method)
        assert list(zip(t.size.tolist(), t.depth.tolist(), t.leaves.tolist())) == expected


@settings(max_examples=100, deadline=None)
@given(dag_edges, st.permutations(list(range(12))))
def test_relabeling_invariance(edges, perm):
    base = all_cascades(make_graph(12, edges))
    relabeled = all_cascades(make_graph(12, [(perm[u], perm[v]) for u, v in edges]))
    for u in range(12):
        a, b = base[u], relabeled[perm[u]]
        assert (a.size, a.depth, a.leaves) == (b.size, b.depth, b.leaves)


@settings(max_examples=100, deadline=None)
@given(dag_edges, st.tuples(st.integers(0, 11), st.integers(0, 11)))
def test_adding_an_edge_never_shrinks_a_cascade(edges, extra):
    u, v = sorted(extra)
    if u == v:
        return
    before = all_cascades(make_graph(12, edges)).size
    after = all_cascades(make_graph(12, sorted(set(edges) | {(u, v)}))).size
    assert np.all(after >= before)


@settings(max_examples=100, deadline=None)
@given(dag_edges)
def test_size_is_one_plus_union_of_children(edges):
    g = make_graph(12, edges)
    reach = closure(12, edges)
    sizes = all_cascades(g).size
    for u in range(12):
        union = set().union(*(reach[int(c)] for c in g.successors(u))) if g.successors(u).size else set()
        assert sizes[u] == 1 + len(union)


def test_invariants_on_synthetic(default_graph):
    t = all_cascades(default_graph)
    assert np.all(t.size >= t.depth + 1) and np.all(t.size >= t.leaves) and np.all(t.leaves >= 1)
    singles = t.size == 1
    assert np.all(t.depth[singles] == 0) and np.all(t.leaves[singles] == 1)


def test_bitset_matches_scalar_on_synthetic(default_graph):
    a = all_cascades(default_graph, method="bitset")
    b = all_cascades(default_graph, method="scalar")
    for col in ("size", "depth", "leaves"):
        assert np.array_equal(getattr(a, col), getattr(b, col))


def test_subset_of_roots(default_graph):
    full = all_cascades(default_graph)
    roots = np.array([5, 17, 9000, 3])
    part = all_cascades(default_graph, roots=roots)
    assert part.root.tolist() == roots.tolist()
    assert part.size.tolist() == full.size[roots].tolist()
    with pytest.raises(ValueError):
        all_cascades(default_graph, method="dfs")


def test_size_distribution_has_sharp_cutoff(default_graph):
    t = all_cascades(default_graph)
    dens = np.array([d for _, _, d in log_binned_distribution(t.size)])
    steps = dens[1:] / dens[:-1]
    # the last populated bin falls off far faster than the body of the distribution
    assert steps[-1] < 0.1 * np.median(steps[:-1])
    assert int(t.size.max()) == 4489 < default_graph.n_nodes


def test_log_binned_distribution():
    rows = log_binned_distribution(np.array([1, 1, 2, 3, 4, 9]))
    assert rows == [(1, 2, 2.0), (2, 2, 1.0), (4, 1, 0.25), (8, 1, 0.125)]
    assert log_binned_distribution(np.array([1, 1]), exclude_singletons=True) == []


def test_csv_rows():
    t = all_cascades(make_graph(4, DIAMOND))
    assert list(t.csv_rows())[0] == (0, 4, 2, 1)
