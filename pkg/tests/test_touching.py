from fractions import Fraction

import numpy as np
import pytest

from perco import rng
from perco.graph import build_window
from perco.percolation import clusters_at, sample_coupling
from perco.touching import (
    expected_class_weight,
    merging_census,
    neighbor_graph,
    repulsion_statistics,
    touching_index,
    touching_partition,
    touching_set,
    touching_weight,
)

from . import oracles


def _lab(family, q, H, p, seed=0, collar=0):
    w = build_window(family, q, H, collar)
    return clusters_at(w, sample_coupling(w, seed), p)


def test_touching_examples():
    lab = _lab("tree_with_end", 2, 1, 0.0)
    assert touching_set(lab, 0, 1) == {0}
    assert touching_set(lab, 1, 0) == {1}
    assert touching_set(lab, 1, 2) == set()
    assert touching_weight(lab, 1, 2) == 0
    assert touching_weight(lab, 0, 1) == 1
    gp = _lab("grandparent", 2, 3, 0.0)
    assert touching_set(gp, 0, 3) == {0}
    with pytest.raises(ValueError):
        touching_set(gp, 0, 0)


def test_touching_weight_two_children():
    w = build_window("tree_with_end", 2, 2)
    open_edges = np.zeros(w.n_edges, dtype=bool)
    from perco.percolation import labeling_from_open

    # open 1-3 and 2-5 so {1,3} and {2,5}; cluster {0} alone
    for e, (u, v) in enumerate(zip(w.edge_u.tolist(), w.edge_v.tolist())):
        if (u, v) in {(1, 3), (2, 5)}:
            open_edges[e] = True
    lab = labeling_from_open(w, open_edges)
    assert touching_set(lab, 1, 0) == {1}
    # tau of the other direction: {0} touches clusters 1 and 2
    total = touching_weight(lab, 1, 0) + touching_weight(lab, 2, 0)
    assert total == 1


@pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
def test_touching_sets_match_oracle(p):
    lab = _lab("grandparent", 2, 6, p, seed=4)
    w = lab.window
    adj = oracles.adjacency(w)
    idx = touching_index(lab)
    ids = lab.cluster_ids.tolist()
    for c in ids[:40]:
        mc = set(lab.members(c).tolist())
        for c2 in ids[:40]:
            if c == c2:
                continue
            m2 = set(lab.members(c2).tolist())
            tau = {x for x in mc if adj[x] & m2}
            assert touching_set(lab, c, c2, idx) == tau
            assert touching_weight(lab, c, c2, idx) == oracles.set_weight(w, tau)
            # emptiness is symmetric even though the sets are not
            assert bool(tau) == bool(touching_set(lab, c2, c, idx))


@pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
def test_partition_invariants(p):
    w = build_window("grandparent", 2, 6)
    adj = oracles.adjacency(w)
    for seed in range(100 // 3 + 1):
        lab = clusters_at(w, sample_coupling(w, seed), p)
        part = touching_partition(lab, seed)
        assert np.array_equal(part.own_cluster, lab.root)
        for x in range(w.n_vertices):
            c2 = int(part.picked_cluster[x])
            nbr_clusters = {int(lab.root[y]) for y in adj[x]} - {int(lab.root[x])}
            if c2 < 0:
                assert not nbr_clusters
            else:
                # picked cluster sits at distance exactly 1
                assert c2 in nbr_clusters
                assert part.n_options[x] == len(nbr_clusters)
        classes = part.classes()
        seen = np.concatenate(list(classes.values()))
        assert sorted(seen.tolist()) == list(range(w.n_vertices))
        for (c, key), members in classes.items():
            assert np.all(lab.root[members] == c)
            if key >= 0:
                assert set(members.tolist()) <= touching_set(lab, c, key)


def test_extreme_partitions():
    lab1 = _lab("grandparent", 2, 5, 1.0)
    part = touching_partition(lab1, 0)
    assert np.all(part.picked_cluster == -1)
    assert part.n_classes == lab1.window.n_vertices
    lab0 = _lab("grandparent", 2, 5, 0.0)
    part = touching_partition(lab0, 0)
    assert part.n_classes == lab0.window.n_vertices
    assert np.all(part.picked_cluster >= 0)


def test_pick_is_pure_function_of_seed_and_vertex():
    lab = _lab("grandparent", 2, 7, 0.4, seed=2)
    a = touching_partition(lab, 77)
    b = touching_partition(lab, 77)
    assert np.array_equal(a.picked_cluster, b.picked_cluster)
    key = rng.stream_key(77, rng.PICK)
    v = int(np.flatnonzero(a.n_options > 1)[0])
    u = rng.uniform(key, v)
    opts = sorted({int(lab.root[y]) for y in lab.window.neighbors(v)} - {int(lab.root[v])})
    assert a.picked_cluster[v] == opts[int(u * len(opts))]


def _chi_square_ok(counts, probs, n):
    # every cell within 3 sigma of its binomial mean
    for c, pr in zip(counts, probs):
        sd = np.sqrt(n * pr * (1 - pr))
        if abs(c - n * pr) > 3 * sd:
            return False
    return True


def test_pick_uniformity_apex():
    lab = _lab("tree_with_end", 2, 3, 0.0)
    idx = touching_index(lab)
    picks = [int(touching_partition(lab, s, index=idx).picked_cluster[0]) for s in range(10_000)]
    counts = [picks.count(1), picks.count(2)]
    assert sum(counts) == 10_000
    assert _chi_square_ok(counts, [0.5, 0.5], 10_000)


def test_pick_law_vertex_uniform_weights_multiplicity():
    lab = _lab("grandparent", 2, 5, 0.5, seed=9)
    idx = touching_index(lab)
    for c in lab.cluster_ids[:10]:
        for c2 in lab.cluster_ids[:10]:
            if c == c2:
                continue
            e1 = expected_class_weight(lab, c, c2, "cluster_uniform", idx)
            e2 = expected_class_weight(lab, c, c2, "vertex_uniform", idx)
            tw = touching_weight(lab, c, c2, idx)
            assert 0 <= e1 <= tw and 0 <= e2 <= tw
    with pytest.raises(ValueError):
        touching_partition(lab, 0, pick_law="nope")


def test_class_weight_mean_matches_exact_expectation():
    lab = _lab("grandparent", 2, 5, 0.5, seed=1)
    idx = touching_index(lab)
    own, other, size, *_ = idx.pairs
    i = int(np.argmax(size))
    c, c2 = int(own[i]), int(other[i])
    exact = expected_class_weight(lab, c, c2, index=idx)
    R = 4000
    vals = [float(touching_partition(lab, s, index=idx).class_weight(c, c2)) for s in range(R)]
    assert abs(np.mean(vals) - float(exact)) <= 4 * np.std(vals) / np.sqrt(R) + 1e-12


def test_neighbor_graph_extremes():
    lab0 = _lab("grandparent", 2, 5, 0.0)
    ng = neighbor_graph(lab0, "nonempty")
    w = lab0.window
    assert len(ng.edge_a) == w.n_edges
    assert sorted(zip(ng.edge_a.tolist(), ng.edge_b.tolist())) == sorted(zip(w.edge_u.tolist(), w.edge_v.tolist()))
    lab1 = _lab("grandparent", 2, 5, 1.0)
    ng = neighbor_graph(lab1, "nonempty")
    assert ng.degree.tolist() == [0]
    assert ng.degree_distribution() == {0: 1}
    for rel in ("heavy_proxy_touch", "finite_touch"):
        g = neighbor_graph(lab0, rel, collar=1)
        assert len(g.edge_a) <= w.n_edges


def test_neighbor_degree_trend():
    # median heavy-proxy degree under "nonempty" should not shrink with H
    meds = []
    for H in (8, 10, 12):
        w = build_window("grandparent", 2, H, collar=1)
        degs = []
        for r in range(20):
            lab = clusters_at(w, sample_coupling(w, rng.replica_seed(3, r)), 0.4)
            degs.extend(neighbor_graph(lab, "nonempty").heavy_degrees().tolist())
        meds.append(float(np.median(degs)))
    assert meds == sorted(meds)


def test_repulsion_examples():
    lab = _lab("tree_with_end", 2, 4, 0.0, collar=1)
    tab = repulsion_statistics(lab)
    rows = {(a, b): Fraction(wt, tab.weight_den) for a, b, _, _, wt, _ in tab.rows()}
    assert rows[(0, 1)] == 1
    assert rows[(1, 0)] == Fraction(1, 2)
    assert (1, 2) not in rows
    one = _lab("tree_with_end", 2, 4, 1.0)
    assert len(repulsion_statistics(one)) == 0
    assert repulsion_statistics(one).summary() == {"n_pairs": 0}


def test_merging_examples():
    w = build_window("grandparent", 2, 8)
    cp = sample_coupling(w, 5)
    same = merging_census(w, cp, 0.5, 0.5)
    assert np.all(same.heavy_counts() == 1)
    zero = merging_census(w, cp, 0.0, 0.6)
    apex_host = int(np.searchsorted(zero.cluster_ids, clusters_at(w, cp, 0.6).root[0]))
    expect = np.zeros(len(zero.counts), dtype=int)
    expect[apex_host] = 1
    assert np.array_equal(zero.counts, expect)
    with pytest.raises(ValueError):
        merging_census(w, cp, 0.7, 0.3)


def test_merging_trend():
    meds = []
    for H in (8, 10, 12):
        w = build_window("grandparent", 2, H, collar=2)
        counts = []
        for r in range(20):
            cp = sample_coupling(w, rng.replica_seed(11, r))
            counts.extend(merging_census(w, cp, 0.35, 0.6).heavy_counts().tolist())
        meds.append(float(np.median(counts)))
    assert meds == sorted(meds)
