"""Monotone coupling of Bernoulli bond percolation and cluster extraction.

Every edge carries a uniform label drawn from a counter-based stream, and the
edge is open at level ``p`` iff its label is ``< p``. A single coupling thus
realises all levels at once, with ``omega_p1`` contained in ``omega_p2``
whenever ``p1 <= p2``.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import kernels, rng
from .graph import GraphWindow
from .parallel import map_replicas


@dataclass(frozen=True, eq=False)
class EdgeCoupling:
    seed: int
    n_edges: int

    @cached_property
    def key(self) -> int:
        return rng.stream_key(self.seed, rng.EDGE)

    @cached_property
    def labels(self) -> np.ndarray:
        lab = rng.uniforms(self.key, np.arange(self.n_edges, dtype=np.uint64))
        lab.flags.writeable = False
        return lab

    def label(self, edge_id: int) -> float:
        return rng.uniform(self.key, edge_id)

    def open_mask(self, p: float) -> np.ndarray:
        return self.labels < p


def sample_coupling(window: GraphWindow, seed: int) -> EdgeCoupling:
    return EdgeCoupling(int(seed) & rng.MASK64, window.n_edges)


@dataclass(frozen=True, eq=False)
class ClusterLabeling:
    """Clusters of ``omega_p`` with exact per-cluster aggregates.

    Cluster ids are the smallest vertex index of each cluster, so they do not
    depend on the order in which edges were merged. Per-cluster arrays are
    indexed by position in ``cluster_ids``; ``cluster_index[v]`` is that
    position for vertex ``v``.
    """

    window: GraphWindow
    p: float
    collar: int
    open_edges: np.ndarray
    root: np.ndarray
    cluster_ids: np.ndarray
    cluster_index: np.ndarray
    size: np.ndarray
    weight_units: np.ndarray
    min_depth: np.ndarray
    max_depth: np.ndarray
    hist_cluster: np.ndarray
    hist_depth: np.ndarray
    hist_count: np.ndarray

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_ids)

    @property
    def heavy_proxy(self) -> np.ndarray:
        return self.min_depth <= self.collar

    def index_of(self, cluster_id: int) -> int:
        i = int(np.searchsorted(self.cluster_ids, cluster_id))
        if i >= len(self.cluster_ids) or self.cluster_ids[i] != cluster_id:
            raise KeyError(f"no cluster with id {cluster_id}")
        return i

    def members(self, cluster_id: int) -> np.ndarray:
        return np.flatnonzero(self.root == cluster_id)

    def level_histogram(self, cluster_id: int) -> dict[int, int]:
        i = self.index_of(cluster_id)
        lo, hi = np.searchsorted(self.hist_cluster, [i, i + 1])
        return {int(d): int(c) for d, c in zip(self.hist_depth[lo:hi], self.hist_count[lo:hi])}

    def weight(self, cluster_id: int) -> Fraction:
        return Fraction(int(self.weight_units[self.index_of(cluster_id)]), self.window.weight_den)

    def cluster_of(self, v: int) -> int:
        return int(self.root[v])

    @cached_property
    def open_graph(self):
        """The configuration ``omega`` as a :class:`~perco.graph.LocalGraph`."""
        return self.window.subgraph(edge_mask=self.open_edges)

    def summary(self) -> dict:
        """Order-independent digest used by the determinism checks."""
        return {
            "p": self.p,
            "n_clusters": self.n_clusters,
            "n_heavy_proxy": int(self.heavy_proxy.sum()),
            "max_weight_units": int(self.weight_units.max()),
            "max_size": int(self.size.max()),
            "root_checksum": int(np.bitwise_xor.reduce(self.root * 0x9E3779B1 + np.arange(len(self.root)))),
        }


def labeling_from_open(window: GraphWindow, open_edges: np.ndarray, p: float = float("nan"), collar: int | None = None) -> ClusterLabeling:
    """Cluster an explicit open-edge mask (used directly by tests with hand-set labels)."""
    open_edges = np.asarray(open_edges, dtype=bool)
    collar = window.collar if collar is None else collar
    root = kernels.components(window.n_vertices, window.edge_u[open_edges], window.edge_v[open_edges])
    ids, inv = np.unique(root, return_inverse=True)
    k = len(ids)
    depth = window.depth
    size = np.bincount(inv, minlength=k)
    weight = np.zeros(k, dtype=np.int64)
    np.add.at(weight, inv, window.weight_units)
    min_depth = np.full(k, window.H + 1, dtype=np.int64)
    np.minimum.at(min_depth, inv, depth)
    max_depth = np.full(k, -1, dtype=np.int64)
    np.maximum.at(max_depth, inv, depth)
    keys, counts = np.unique(inv * (window.H + 1) + depth, return_counts=True)
    return ClusterLabeling(
        window=window,
        p=p,
        collar=collar,
        open_edges=open_edges,
        root=root,
        cluster_ids=ids,
        cluster_index=inv,
        size=size,
        weight_units=weight,
        min_depth=min_depth,
        max_depth=max_depth,
        hist_cluster=keys // (window.H + 1),
        hist_depth=keys % (window.H + 1),
        hist_count=counts,
    )


def clusters_at(window: GraphWindow, coupling: EdgeCoupling, p: float, collar: int | None = None) -> ClusterLabeling:
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return labeling_from_open(window, coupling.open_mask(p), p, collar)


def cluster_weight(labeling: ClusterLabeling, cluster_id: int) -> Fraction:
    """Exact apex-relative weight of a cluster."""
    return labeling.weight(cluster_id)


def classify_heavy_proxy(labeling: ClusterLabeling, collar: int | None = None) -> set[int]:
    """Clusters meeting the top band ``depth <= collar``.

    A finite stand-in for heavy clusters: in the infinite graph those are the
    clusters reaching arbitrarily high weight, i.e. climbing toward the apex.
    """
    collar = labeling.collar if collar is None else collar
    if not 0 <= collar < labeling.window.H:
        raise ValueError("collar must satisfy 0 <= collar < H")
    return {int(c) for c in labeling.cluster_ids[labeling.min_depth <= collar]}


# ---------------------------------------------------------------------------
# phase scan
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseScanRecord:
    p: float
    replica: int
    n_clusters: int
    n_heavy_proxy: int
    max_weight_num: int
    max_weight_den_exp: int
    max_size: int
    apex_reach: int
    n_rim_heavy: int

    CSV_FIELDS = (
        "p",
        "replica",
        "n_clusters",
        "n_heavy_proxy",
        "max_weight_num",
        "max_weight_den_exp",
        "max_size",
        "apex_reach",
        "n_rim_heavy",
    )

    def row(self) -> list:
        return [repr(float(self.p))] + [getattr(self, f) for f in self.CSV_FIELDS[1:]]


def _scan_replica(window: GraphWindow, grid: np.ndarray, seed: int, replica: int, collar: int) -> list[PhaseScanRecord]:
    coupling = sample_coupling(window, rng.replica_seed(seed, replica))
    labels = coupling.labels
    order = np.argsort(labels, kind="stable")
    snaps = np.searchsorted(labels[order], grid, side="left")
    stats = kernels.sweep(
        window.n_vertices,
        window.edge_u[order],
        window.edge_v[order],
        snaps,
        window.depth,
        window.weight_units,
        window.depth <= collar,
        window.depth == window.H,
    )
    den_exp = 0 if window.family == "unit_tree" else window.H
    return [
        PhaseScanRecord(float(p), replica, int(s[0]), int(s[1]), int(s[2]), den_exp, int(s[3]), int(s[4]), int(s[5]))
        for p, s in zip(grid, stats)
    ]


def phase_scan(window: GraphWindow, p_grid, replicas: int, seed: int, collar: int | None = None, threads: int | None = None) -> list[PhaseScanRecord]:
    """One record per ``(p, replica)``, sorted by ``p`` then replica.

    Replica ``r`` uses the coupling seeded by ``replica_seed(seed, r)``; each
    replica is a single sweep that adds edges in label order and snapshots the
    statistics at every grid point.
    """
    grid = np.asarray(p_grid, dtype=np.float64)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("p_grid must be a nonempty 1-d sequence")
    if np.any(np.diff(grid) < 0) or grid[0] < 0 or grid[-1] > 1:
        raise ValueError("p_grid must be sorted within [0, 1]")
    collar = window.collar if collar is None else collar
    per_replica = map_replicas(lambda r: _scan_replica(window, grid, seed, r, collar), replicas, threads)
    return [per_replica[r][i] for i in range(len(grid)) for r in range(replicas)]


def scan_crossovers(records: list[PhaseScanRecord], window: GraphWindow, reach_level: float = 0.1, rim_level: float = 0.1) -> dict:
    """Empirical crossover points of a phase scan (heuristics, no scaling theory).

    ``p_c``: first p where at least ``reach_level`` of the replicas connect the
    apex to the deepest level. ``p_h``: first p where the median fraction of
    deepest-level vertices lying in heavy-proxy clusters reaches ``rim_level``.
    ``p_u``: first p where most replicas have a single heavy-proxy cluster;
    only meaningful with ``collar >= 1``, otherwise ``None``.
    """
    by_p: dict[float, list[PhaseScanRecord]] = {}
    for rec in records:
        by_p.setdefault(rec.p, []).append(rec)
    rim_size = window.q**window.H
    collar = window.collar
    out = {"p_c": None, "p_h": None, "p_u": None}
    for p in sorted(by_p):
        recs = by_p[p]
        reach = np.mean([r.apex_reach == window.H for r in recs])
        rim = np.median([r.n_rim_heavy / rim_size for r in recs])
        unique = np.mean([r.n_heavy_proxy == 1 for r in recs])
        if out["p_c"] is None and reach >= reach_level:
            out["p_c"] = p
        if out["p_h"] is None and rim >= rim_level:
            out["p_h"] = p
        if collar >= 1 and out["p_u"] is None and unique >= 0.5:
            out["p_u"] = p
    return out
