"""Touching sets between clusters and the touching-class partition.

For clusters ``C != C'`` the touching set is the part of ``C`` within unit
distance of ``C'``. Touching sets are not invariant (they single out ``C'``),
so the analysis also builds the touching-class partition: every vertex picks
one neighbouring cluster at random, and vertices sharing both their own
cluster and their pick form a class.

All pair statistics come from one sweep over the edges whose endpoints lie in
different clusters; no cluster pairs without contact are ever formed.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import rng
from .percolation import ClusterLabeling, EdgeCoupling, clusters_at

PICK_LAWS = ("cluster_uniform", "vertex_uniform")
RELATIONS = ("nonempty", "heavy_proxy_touch", "finite_touch")
FINITE_TOUCH_THRESHOLD = 8


@dataclass(frozen=True, eq=False)
class TouchingIndex:
    """Incidences ``(x, own cluster, other cluster)`` across closed edges."""

    labeling: ClusterLabeling
    # one row per crossing incidence, sorted by (x, neighbour)
    inc_x: np.ndarray
    inc_nbr: np.ndarray
    inc_other: np.ndarray
    # distinct (own, other, x), sorted in that order
    own: np.ndarray
    other: np.ndarray
    x: np.ndarray

    @cached_property
    def pairs(self):
        """Directed pair table: ``(own, other, size, weight_units, min_depth)``."""
        lab = self.labeling
        if len(self.x) == 0:
            z = np.zeros(0, dtype=np.int64)
            return z, z, z, z, z
        key_change = np.r_[True, (self.own[1:] != self.own[:-1]) | (self.other[1:] != self.other[:-1])]
        starts = np.flatnonzero(key_change)
        seg = np.cumsum(key_change) - 1
        size = np.bincount(seg)
        wu = np.bincount(seg, weights=lab.window.weight_units[self.x]).astype(np.int64)
        mind = np.full(len(starts), lab.window.H + 1, dtype=np.int64)
        np.minimum.at(mind, seg, lab.window.depth[self.x])
        return self.own[starts], self.other[starts], size, wu, mind

    def touching_set(self, c: int, c2: int) -> np.ndarray:
        lo = np.searchsorted(self._pair_key, self._key(c, c2), side="left")
        hi = np.searchsorted(self._pair_key, self._key(c, c2), side="right")
        return self.x[lo:hi]

    def _key(self, c, c2):
        return np.int64(c) * self.labeling.window.n_vertices + np.int64(c2)

    @cached_property
    def _pair_key(self):
        return self.own * self.labeling.window.n_vertices + self.other


def touching_index(labeling: ClusterLabeling) -> TouchingIndex:
    win = labeling.window
    r = labeling.root
    eu, ev = win.edge_u, win.edge_v
    cross = r[eu] != r[ev]
    a, b = eu[cross], ev[cross]
    inc_x = np.concatenate([a, b])
    inc_nbr = np.concatenate([b, a])
    order = np.lexsort((inc_nbr, inc_x))
    inc_x, inc_nbr = inc_x[order], inc_nbr[order]
    inc_other = r[inc_nbr]
    n = win.n_vertices
    own = r[inc_x]
    key = np.unique((own * n + inc_other) * n + inc_x)
    x = key % n
    pair = key // n
    return TouchingIndex(labeling, inc_x, inc_nbr, inc_other, pair // n, pair % n, x)


def _index(labeling_or_index) -> TouchingIndex:
    if isinstance(labeling_or_index, TouchingIndex):
        return labeling_or_index
    return touching_index(labeling_or_index)


def touching_set(labeling: ClusterLabeling, c: int, c2: int, index: TouchingIndex | None = None) -> set[int]:
    """Vertices of cluster ``c`` at distance one from cluster ``c2``."""
    labeling.index_of(c)
    labeling.index_of(c2)
    if c == c2:
        raise ValueError("touching set needs two distinct clusters")
    idx = index or touching_index(labeling)
    return {int(v) for v in idx.touching_set(c, c2)}


def touching_weight(labeling: ClusterLabeling, c: int, c2: int, index: TouchingIndex | None = None) -> Fraction:
    return labeling.window.weight(sorted(touching_set(labeling, c, c2, index)))


# ---------------------------------------------------------------------------
# touching-class partition
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TouchingPartition:
    """Per-vertex picks and the induced classes.

    ``picked_cluster[v] == -1`` marks a vertex with no neighbouring cluster;
    such a vertex forms a singleton class. ``stream_id[v]`` is the counter of
    the pick stream used for ``v``. ``n_options[v]`` is the number of
    alternatives ``v`` chose among.
    """

    labeling: ClusterLabeling
    seed: int
    pick_law: str
    own_cluster: np.ndarray
    picked_cluster: np.ndarray
    stream_id: np.ndarray
    n_options: np.ndarray
    class_id: np.ndarray

    @property
    def n_classes(self) -> int:
        return int(self.class_id.max()) + 1 if len(self.class_id) else 0

    def class_members(self, c: int, c2: int) -> np.ndarray:
        return np.flatnonzero((self.own_cluster == c) & (self.picked_cluster == c2))

    def class_weight(self, c: int, c2: int) -> Fraction:
        return self.labeling.window.weight(self.class_members(c, c2))

    def classes(self) -> dict:
        """Mapping ``(own, picked)`` to member arrays; singletons keyed ``(own, -1 - v)``."""
        keys = np.where(self.picked_cluster >= 0, self.picked_cluster, -1 - np.arange(len(self.picked_cluster)))
        out: dict = {}
        order = np.lexsort((keys, self.own_cluster))
        own_s, key_s = self.own_cluster[order], keys[order]
        brk = np.flatnonzero(np.r_[True, (own_s[1:] != own_s[:-1]) | (key_s[1:] != key_s[:-1]), True])
        for lo, hi in zip(brk[:-1], brk[1:]):
            out[(int(own_s[lo]), int(key_s[lo]))] = np.sort(order[lo:hi])
        return out


def touching_partition(labeling: ClusterLabeling, seed: int, pick_law: str = "cluster_uniform", index: TouchingIndex | None = None) -> TouchingPartition:
    """Let each vertex pick a neighbouring cluster uniformly at random.

    ``cluster_uniform`` draws among the distinct neighbouring clusters;
    ``vertex_uniform`` draws a neighbour outside the own cluster and takes
    its cluster, so clusters are weighted by contact multiplicity. The draw
    for vertex ``v`` is the ``v``-th value of the pick stream of ``seed``.
    """
    if pick_law not in PICK_LAWS:
        raise ValueError(f"pick_law must be one of {PICK_LAWS}")
    idx = index or touching_index(labeling)
    n = labeling.window.n_vertices
    if pick_law == "cluster_uniform":
        # distinct (x, other): re-sort the (own, other, x) table by x
        order = np.lexsort((idx.other, idx.x))
        xs, opts = idx.x[order], idx.other[order]
    else:
        xs, opts = idx.inc_x, idx.inc_other
    k = np.bincount(xs, minlength=n)
    start = np.zeros(n, dtype=np.int64)
    np.cumsum(k[:-1], out=start[1:])
    has = np.flatnonzero(k > 0)
    u = rng.uniforms(rng.stream_key(seed, rng.PICK), has.astype(np.uint64))
    choice = np.minimum((u * k[has]).astype(np.int64), k[has] - 1)
    picked = np.full(n, -1, dtype=np.int64)
    picked[has] = opts[start[has] + choice]
    own = labeling.root
    class_key = np.where(picked >= 0, own * n + picked, -1 - np.arange(n))
    _, class_id = np.unique(class_key, return_inverse=True)
    return TouchingPartition(
        labeling, seed, pick_law, own, picked, np.arange(n, dtype=np.int64), k, class_id.astype(np.int64)
    )


def expected_class_weight(labeling: ClusterLabeling, c: int, c2: int, pick_law: str = "cluster_uniform", index: TouchingIndex | None = None) -> Fraction:
    """Exact mean weight of the class ``(c, c2)`` over the pick randomness."""
    idx = index or touching_index(labeling)
    win = labeling.window
    total = Fraction(0)
    for x in idx.touching_set(c, c2):
        if pick_law == "cluster_uniform":
            sel = idx.x == x
            k = len(np.unique(idx.other[sel]))
            hits = 1
        else:
            sel = idx.inc_x == x
            k = int(sel.sum())
            hits = int((idx.inc_other[sel] == c2).sum())
        total += Fraction(int(win.weight_units[x]) * hits, win.weight_den * k)
    return total


# ---------------------------------------------------------------------------
# cluster-level graphs and statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    relation: str
    cluster_ids: np.ndarray
    heavy: np.ndarray
    edge_a: np.ndarray
    edge_b: np.ndarray
    degree: np.ndarray

    def heavy_degrees(self) -> np.ndarray:
        return self.degree[self.heavy]

    def degree_distribution(self, heavy_only: bool = True) -> dict[int, int]:
        d = self.heavy_degrees() if heavy_only else self.degree
        vals, counts = np.unique(d, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}


def neighbor_graph(labeling: ClusterLabeling, relation: str = "nonempty", collar: int | None = None, finite_threshold: int = FINITE_TOUCH_THRESHOLD, index: TouchingIndex | None = None) -> NeighborGraph:
    """Cluster graph joining ``C`` and ``C'`` when their contact satisfies ``relation``.

    ``nonempty``: the touching set is nonempty. ``heavy_proxy_touch``: the
    touching set meets the top band ``depth <= collar``. ``finite_touch``: the
    touching set is nonempty with at most ``finite_threshold`` vertices. The
    last two are evaluated per direction and an edge is placed when either
    direction qualifies.
    """
    if relation not in RELATIONS:
        raise ValueError(f"relation must be one of {RELATIONS}")
    collar = labeling.collar if collar is None else collar
    idx = index or touching_index(labeling)
    own, other, size, _, mind = idx.pairs
    if relation == "nonempty":
        ok = size > 0
    elif relation == "heavy_proxy_touch":
        ok = mind <= collar
    else:
        ok = (size > 0) & (size <= finite_threshold)
    a = np.minimum(own[ok], other[ok])
    b = np.maximum(own[ok], other[ok])
    n = labeling.window.n_vertices
    key = np.unique(a * n + b)
    a, b = key // n, key % n
    ids = labeling.cluster_ids
    ia = np.searchsorted(ids, a)
    ib = np.searchsorted(ids, b)
    degree = np.bincount(ia, minlength=len(ids)) + np.bincount(ib, minlength=len(ids))
    heavy = labeling.min_depth <= collar
    return NeighborGraph(relation, ids, heavy, a, b, degree)


@dataclass(frozen=True, eq=False)
class RepulsionTable:
    """Contacts between distinct heavy-proxy clusters, weights in ``1/weight_den`` units."""

    weight_den: int
    c: np.ndarray
    c2: np.ndarray
    w_c: np.ndarray
    w_c2: np.ndarray
    w_tau: np.ndarray
    size_tau: np.ndarray

    def __len__(self) -> int:
        return len(self.c)

    def rows(self) -> list[tuple]:
        return list(zip(*(a.tolist() for a in (self.c, self.c2, self.w_c, self.w_c2, self.w_tau, self.size_tau))))

    def summary(self, quantiles=(0.0, 0.25, 0.5, 0.75, 1.0)) -> dict:
        out = {"n_pairs": len(self)}
        if len(self) == 0:
            return out
        den = float(self.weight_den)
        for name, col in (("w_c", self.w_c / den), ("w_tau", self.w_tau / den), ("size_tau", self.size_tau)):
            out[name] = {str(q): float(np.quantile(col, q)) for q in quantiles}
        return out


def repulsion_statistics(labeling: ClusterLabeling, collar: int | None = None, index: TouchingIndex | None = None) -> RepulsionTable:
    """Touching-set weight for every ordered pair of heavy-proxy clusters in contact."""
    collar = labeling.collar if collar is None else collar
    idx = index or touching_index(labeling)
    own, other, size, wu, _ = idx.pairs
    heavy_ids = labeling.cluster_ids[labeling.min_depth <= collar]
    keep = np.isin(own, heavy_ids) & np.isin(other, heavy_ids)
    own, other = own[keep], other[keep]
    wc = labeling.weight_units[np.searchsorted(labeling.cluster_ids, own)]
    wc2 = labeling.weight_units[np.searchsorted(labeling.cluster_ids, other)]
    return RepulsionTable(labeling.window.weight_den, own, other, wc, wc2, wu[keep], size[keep])


@dataclass(frozen=True, eq=False)
class MergingCensus:
    p1: float
    p2: float
    cluster_ids: np.ndarray
    heavy: np.ndarray
    counts: np.ndarray

    def heavy_counts(self) -> np.ndarray:
        return self.counts[self.heavy]


def merging_census(window, coupling: EdgeCoupling, p1: float, p2: float, collar: int | None = None) -> MergingCensus:
    """How many heavy-proxy ``p1``-clusters each ``p2``-cluster contains."""
    if p1 > p2:
        raise ValueError("merging census needs p1 <= p2")
    lab1 = clusters_at(window, coupling, p1, collar)
    lab2 = clusters_at(window, coupling, p2, collar)
    collar = lab1.collar
    heavy1 = lab1.cluster_ids[lab1.min_depth <= collar]
    # cluster ids are member vertices, so the containing p2-cluster is a lookup
    host = np.searchsorted(lab2.cluster_ids, lab2.root[heavy1])
    counts = np.bincount(host, minlength=lab2.n_clusters)
    return MergingCensus(p1, p2, lab2.cluster_ids, lab2.min_depth <= collar, counts)
