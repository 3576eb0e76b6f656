import random
from fractions import Fraction

import numpy as np
import pytest

from perco.graph import (
    OrbitTruncated,
    WindowTooLarge,
    build_window,
    cocycle,
    n_vertices_for,
    orbit_count_ratio,
)

from . import oracles


@pytest.mark.parametrize(
    "family,q,H,nv,ne",
    [("tree_with_end", 2, 2, 7, 6), ("grandparent", 2, 2, 7, 10), ("tree_with_end", 3, 3, 40, 39)],
)
def test_window_sizes(family, q, H, nv, ne):
    w = build_window(family, q, H)
    assert w.n_vertices == nv
    assert w.n_edges == ne


@pytest.mark.parametrize("q", [2, 3])
@pytest.mark.parametrize("H", range(1, 7))
@pytest.mark.parametrize("family", ["tree_with_end", "grandparent", "unit_tree"])
def test_closed_form_counts(family, q, H):
    w = build_window(family, q, H)
    n = (q ** (H + 1) - 1) // (q - 1)
    assert w.n_vertices == n == n_vertices_for(q, H)
    tree_edges = n - 1
    # grandparent edges: every vertex at depth >= 2
    gp_edges = n - 1 - q if family == "grandparent" else 0
    assert w.n_edges == tree_edges + gp_edges
    assert np.all(np.diff(np.bincount(w.depth)) >= 0)
    assert np.bincount(w.depth).tolist() == [q**d for d in range(H + 1)]


def test_edges_canonical_and_readonly():
    w = build_window("grandparent", 2, 4)
    keys = list(zip(w.edge_u.tolist(), w.edge_v.tolist(), w.edge_kind.tolist()))
    assert keys == sorted(keys)
    assert all(u < v for u, v, _ in keys)
    with pytest.raises(ValueError):
        w.edge_u[0] = 5


def test_invalid_windows():
    with pytest.raises(ValueError):
        build_window("tree_with_end", 1, 3)
    with pytest.raises(ValueError):
        build_window("tree_with_end", 2, 0)
    with pytest.raises(ValueError):
        build_window("tree_with_end", 2, 3, collar=3)
    with pytest.raises(WindowTooLarge):
        build_window("tree_with_end", 2, 40)


def test_weights_exact():
    w = build_window("tree_with_end", 2, 2)
    assert w.weight([0]) == 1
    assert w.weight([0, 1]) == Fraction(3, 2)
    assert w.weight(range(7)) == 3
    assert w.weight([3]) == Fraction(1, 4)
    u = build_window("unit_tree", 2, 3)
    assert u.weight(range(u.n_vertices)) == 15


def test_cocycle_examples():
    w = build_window("tree_with_end", 2, 4)
    assert cocycle(w, 5, 5) == 1
    assert cocycle(w, 0, 1) == Fraction(1, 2)
    x = w.level_offset(3)
    assert cocycle(w, x, 0) == 8
    assert cocycle(build_window("unit_tree", 2, 4), 0, 1) == 1


def test_orbit_examples():
    w2 = build_window("tree_with_end", 2, 6)
    x = w2.level_offset(4) + 3
    assert orbit_count_ratio(w2, x, w2.parent(x)) == 2
    assert orbit_count_ratio(w2, x, x) == 1
    w3 = build_window("tree_with_end", 3, 5)
    x = w3.level_offset(3) + 4
    sib = x + 1 if w3.parent(x + 1) == w3.parent(x) else x - 1
    assert orbit_count_ratio(w3, x, sib) == 1


@pytest.mark.parametrize("family", ["tree_with_end", "grandparent"])
@pytest.mark.parametrize("q", [2, 3])
def test_cocycle_matches_orbit_oracle_exhaustive(family, q):
    w = build_window(family, q, 8 if q == 2 else 6)
    near = np.flatnonzero(w.depth <= 4)
    for x in near.tolist():
        for y in near.tolist():
            assert cocycle(w, x, y) == orbit_count_ratio(w, x, y)


def test_orbit_truncation_signalled():
    w = build_window("unit_tree", 2, 3)
    with pytest.raises(OrbitTruncated):
        orbit_count_ratio(w, 0, w.level_offset(3))


def test_cocycle_chain_rule():
    rnd = random.Random(1)
    for family in ("tree_with_end", "grandparent", "unit_tree"):
        w = build_window(family, 3, 6)
        for _ in range(10_000 // 3):
            x, y, z = (rnd.randrange(w.n_vertices) for _ in range(3))
            assert cocycle(w, x, y) * cocycle(w, y, z) == cocycle(w, x, z)
            assert cocycle(w, x, y) * cocycle(w, y, x) == 1


def test_cocycle_matches_weight_ratio():
    w = build_window("grandparent", 2, 5)
    for x in range(0, w.n_vertices, 5):
        for y in range(0, w.n_vertices, 7):
            assert cocycle(w, x, y) == oracles.vertex_weight(w, y) / oracles.vertex_weight(w, x)


@pytest.mark.parametrize("family", ["tree_with_end", "grandparent"])
def test_adjacency_and_rim(family):
    w = build_window(family, 2, 5)
    adj = oracles.adjacency(w)
    for v in range(w.n_vertices):
        assert sorted(w.neighbors(v).tolist()) == sorted(adj[v])
    full = w.full_degree
    for v in range(w.n_vertices):
        d = int(w.depth[v])
        interior = 2 <= d <= w.H - 2 if family == "grandparent" else 1 <= d <= w.H - 1
        assert bool(w.rim[v]) == (not interior)
        if interior:
            assert len(adj[v]) == full


def test_meet_and_distance():
    w = build_window("tree_with_end", 2, 5)
    adj = oracles.adjacency(w)
    for x in range(0, w.n_vertices, 3):
        dist = oracles.bfs(adj, x)
        for y in range(w.n_vertices):
            assert w.tree_distance(x, y) == dist[y]
