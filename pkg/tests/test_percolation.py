import random
from fractions import Fraction

import numpy as np
import pytest

from perco import rng
from perco.graph import build_window
from perco.percolation import (
    PhaseScanRecord,
    classify_heavy_proxy,
    cluster_weight,
    clusters_at,
    labeling_from_open,
    phase_scan,
    sample_coupling,
    scan_crossovers,
)

from . import oracles


def test_coupling_deterministic_and_distinct():
    w = build_window("grandparent", 2, 9)
    assert w.n_edges >= 1000
    a = sample_coupling(w, 11).labels
    b = sample_coupling(w, 11).labels
    c = sample_coupling(w, 12).labels
    assert np.array_equal(a, b)
    assert np.mean(a != c) >= 0.99
    half = 3 / np.sqrt(12 * w.n_edges)
    assert 0.5 - half <= a.mean() <= 0.5 + half


def test_extreme_p():
    w = build_window("grandparent", 2, 6)
    cp = sample_coupling(w, 3)
    lab0 = clusters_at(w, cp, 0.0)
    assert lab0.n_clusters == w.n_vertices
    assert np.all(lab0.size == 1)
    lab1 = clusters_at(w, cp, 1.0)
    assert lab1.n_clusters == 1
    assert lab1.weight(0) == w.weight(range(w.n_vertices))


def test_hand_labelled_h1():
    w = build_window("tree_with_end", 2, 1)
    lab = labeling_from_open(w, np.array([0.3, 0.7]) < 0.5, p=0.5)
    assert sorted(map(sorted, (lab.members(c).tolist() for c in lab.cluster_ids))) == [[0, 1], [2]]
    assert cluster_weight(lab, 0) == Fraction(3, 2)
    assert cluster_weight(lab, 2) == Fraction(1, 2)


def test_cluster_weight_examples():
    w = build_window("tree_with_end", 2, 2)
    cp = sample_coupling(w, 0)
    assert cluster_weight(clusters_at(w, cp, 1.0), 0) == 3
    assert cluster_weight(clusters_at(w, cp, 0.0), 3) == Fraction(1, 4)


def test_heavy_proxy_examples():
    w = build_window("tree_with_end", 2, 4)
    cp = sample_coupling(w, 0)
    assert classify_heavy_proxy(clusters_at(w, cp, 1.0), 0) == {0}
    assert classify_heavy_proxy(clusters_at(w, cp, 0.0), 0) == {0}
    assert classify_heavy_proxy(clusters_at(w, cp, 0.0), 1) == {0, 1, 2}


@pytest.mark.parametrize("family", ["tree_with_end", "grandparent", "unit_tree"])
@pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
def test_components_match_oracle(family, p):
    w = build_window(family, 2, 7)
    cp = sample_coupling(w, 21)
    lab = clusters_at(w, cp, p)
    comps = oracles.components(oracles.adjacency(w, cp.open_mask(p)))
    got = {frozenset(lab.members(c).tolist()) for c in lab.cluster_ids}
    assert got == set(comps)
    for comp in comps:
        cid = min(comp)
        assert lab.cluster_of(next(iter(comp))) == cid
        assert lab.weight(cid) == oracles.set_weight(w, comp)
        assert lab.size[lab.index_of(cid)] == len(comp)
        hist = {}
        for v in comp:
            hist[int(w.depth[v])] = hist.get(int(w.depth[v]), 0) + 1
        assert lab.level_histogram(cid) == hist


def test_aggregate_audit_random_clusters():
    w = build_window("grandparent", 2, 10)
    rnd = random.Random(5)
    lab = clusters_at(w, sample_coupling(w, 8), 0.45)
    for cid in rnd.sample(lab.cluster_ids.tolist(), 100):
        m = lab.members(cid)
        i = lab.index_of(cid)
        assert lab.size[i] == len(m)
        assert lab.weight(cid) == oracles.set_weight(w, m.tolist())
        assert lab.min_depth[i] == w.depth[m].min()
        assert lab.max_depth[i] == w.depth[m].max()


def test_refinement():
    w = build_window("grandparent", 2, 8)
    for seed in range(10):
        cp = sample_coupling(w, seed)
        lo, hi = clusters_at(w, cp, 0.3), clusters_at(w, cp, 0.6)
        for c in lo.cluster_ids:
            assert len(np.unique(hi.root[lo.members(c)])) == 1


def test_labeling_determinism():
    w = build_window("grandparent", 2, 9)
    a = clusters_at(w, sample_coupling(w, 4), 0.5).summary()
    b = clusters_at(w, sample_coupling(w, 4), 0.5).summary()
    assert a == b


def test_phase_scan_extremes_and_monotone():
    w = build_window("grandparent", 2, 7)
    recs = phase_scan(w, [0.0, 0.25, 0.5, 0.75, 1.0], 4, seed=9)
    assert [(r.p, r.replica) for r in recs] == sorted((r.p, r.replica) for r in recs)
    for r in recs:
        if r.p == 0.0:
            assert r.n_clusters == w.n_vertices
        if r.p == 1.0:
            assert r.n_clusters == 1
    for rep in range(4):
        seq = [r.n_clusters for r in recs if r.replica == rep]
        assert seq == sorted(seq, reverse=True)


def test_phase_scan_matches_direct_labeling():
    w = build_window("tree_with_end", 2, 8)
    grid = [0.1, 0.4, 0.7, 0.95]
    recs = phase_scan(w, grid, 3, seed=2, collar=1)
    for r in recs:
        cp = sample_coupling(w, rng.replica_seed(2, r.replica))
        lab = clusters_at(w, cp, r.p, collar=1)
        assert r.n_clusters == lab.n_clusters
        assert r.n_heavy_proxy == int(lab.heavy_proxy.sum())
        assert r.max_size == int(lab.size.max())
        assert Fraction(r.max_weight_num, 2**r.max_weight_den_exp) == max(lab.weight(c) for c in lab.cluster_ids)


def test_phase_scan_thread_independent():
    w = build_window("grandparent", 2, 8)
    a = phase_scan(w, [0.2, 0.6], 6, seed=1, threads=1)
    b = phase_scan(w, [0.2, 0.6], 6, seed=1, threads=4)
    assert [r.row() for r in a] == [r.row() for r in b]


def test_branching_threshold_unit_tree():
    # T_3 (q = 2): apex cluster survives to depth H with prob -> 0 below p = 1/2
    w = build_window("unit_tree", 2, 14)
    recs = phase_scan(w, [0.3, 0.7], 200, seed=17)
    reach = {p: np.mean([r.apex_reach == w.H for r in recs if r.p == p]) for p in (0.3, 0.7)}
    assert reach[0.3] <= 0.01
    # survival of Bin(2, 0.7) branching: 1 - s with s = ((1-p)/p)^2
    assert reach[0.7] >= 0.5


def test_crossovers_shape():
    w = build_window("grandparent", 2, 8)
    recs = phase_scan(w, [i / 10 for i in range(11)], 4, seed=3, collar=1)
    out = scan_crossovers(recs, w)
    assert set(out) >= {"p_c", "p_h", "p_u"}
    assert list(PhaseScanRecord.CSV_FIELDS[:2]) == ["p", "replica"]
