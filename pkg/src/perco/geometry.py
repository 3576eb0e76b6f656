"""Weighted isoperimetry, weight growth along spheres, and labeled annuli.

Every routine accepts either a :class:`~perco.graph.GraphWindow` (the whole
window graph) or a :class:`~perco.graph.LocalGraph` (a subgraph such as a
cluster). Roots are given in the graph's own indexing; reported vertex sets
are mapped back to window ids.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .graph import GraphWindow, LocalGraph

DEFAULT_K_MAX = 12
ENUMERATION_CAP = 5_000_000


class BoundaryIntrusion(ValueError):
    """A sphere that must be complete reaches vertices cut off by the window."""


class LabelOutOfRange(ValueError):
    pass


def _as_local(graph) -> LocalGraph:
    return graph.graph if isinstance(graph, GraphWindow) else graph


# ---------------------------------------------------------------------------
# growth profiles
# ---------------------------------------------------------------------------


@dataclass
class GrowthProfile:
    root: int
    n_max: int
    weight_den: int
    sphere_units: list[int]
    ball_units: list[int]

    def sphere(self, n: int) -> Fraction:
        return Fraction(self.sphere_units[n], self.weight_den)

    def ball(self, n: int) -> Fraction:
        return Fraction(self.ball_units[n], self.weight_den)

    def phi_ball(self) -> Fraction | None:
        """``min_{0 <= n < n_max} w(S_{n+1}) / w(B_n)``; ``None`` when ``n_max == 0``."""
        if self.n_max == 0:
            return None
        return min(Fraction(self.sphere_units[n + 1], self.ball_units[n]) for n in range(self.n_max))


def safe_radius(graph, root: int) -> int:
    """Largest ``n`` such that no rim vertex lies within distance ``n - 1`` of ``root``.

    Spheres up to that radius are the same as in the infinite graph.
    """
    g = _as_local(graph)
    indptr, nbr, _ = g.csr
    dist = kernels.bfs(indptr, nbr, root)
    rim_d = dist[(dist >= 0) & g.rim]
    reach = int(dist.max())
    return reach if len(rim_d) == 0 else min(reach, int(rim_d.min()))


def growth_profile(graph, root: int, n_max: int | None = None) -> GrowthProfile:
    g = _as_local(graph)
    limit = safe_radius(g, root)
    if n_max is None:
        n_max = limit
    elif n_max > limit:
        raise BoundaryIntrusion(f"boundary intrusion: radius {n_max} exceeds interior radius {limit} at root {root}")
    indptr, nbr, _ = g.csr
    dist = kernels.bfs(indptr, nbr, root, n_max)
    sel = dist >= 0
    per = np.zeros(n_max + 1, dtype=np.int64)
    np.add.at(per, dist[sel], g.weight_units[sel])
    sphere_units = [int(u) for u in per]
    ball_units = [int(b) for b in np.cumsum(np.array(sphere_units, dtype=object))]
    return GrowthProfile(root, n_max, g.weight_den, sphere_units, ball_units)


def growth_lower_bound(phi, w_o, n: int) -> Fraction:
    """``phi * w_o * (1 + phi)**(n - 1)``, exactly."""
    phi, w_o = Fraction(phi), Fraction(w_o)
    if phi <= 0:
        raise ValueError("phi must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    return phi * w_o * (1 + phi) ** (n - 1)


@dataclass
class GrowthCheck:
    profile: GrowthProfile
    phi_ball: Fraction | None
    rows: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.rows)


def verify_growth(graph, root: int, n_max: int | None = None) -> GrowthCheck:
    """Check ``w(S_n) >= phi_ball w(o) (1 + phi_ball)**(n-1)`` for ``1 <= n <= n_max``.

    ``phi_ball`` is read off the same profile, so the recursion guarantees the
    inequality; a failure indicates a bug, not bad luck.
    """
    prof = growth_profile(graph, root, n_max)
    phi = prof.phi_ball()
    w_o = prof.sphere(0)
    rows = []
    for n in range(1, prof.n_max + 1):
        bound = growth_lower_bound(phi, w_o, n) if phi and phi > 0 else Fraction(0)
        s = prof.sphere(n)
        rows.append({"n": n, "sphere": s, "bound": bound, "pass": s >= bound})
    return GrowthCheck(prof, phi, rows)


# ---------------------------------------------------------------------------
# weighted Cheeger constant, restricted to small connected sets
# ---------------------------------------------------------------------------


@dataclass
class CheegerReport:
    root: int
    k: int
    phi: Fraction
    per_size: list[Fraction | None]
    witness: list[int]
    n_enumerated: int
    complete: bool
    rim_censored: bool
    phi_ball: Fraction | None
    ball_radius: int

    def phi_upto(self, k: int) -> Fraction:
        return min(r for r in self.per_size[1 : k + 1] if r is not None)

    def to_json(self) -> dict:
        fr = lambda x: None if x is None else {"num": x.numerator, "den": x.denominator}  # noqa: E731
        return {
            "root": self.root,
            "k": self.k,
            "phi": fr(self.phi),
            "per_size": [fr(x) for x in self.per_size[1:]],
            "witness": self.witness,
            "n_enumerated": self.n_enumerated,
            "complete": self.complete,
            "rim_censored": self.rim_censored,
            "phi_ball": fr(self.phi_ball),
            "ball_radius": self.ball_radius,
        }


def boundary_ratio(graph, vertices) -> Fraction:
    """``w(outer vertex boundary of F) / w(F)`` for an explicit set ``F``."""
    g = _as_local(graph)
    F = np.unique(np.asarray(vertices, dtype=np.int64))
    indptr, nbr, _ = g.csr
    nb = np.concatenate([nbr[indptr[v]:indptr[v + 1]] for v in F])
    boundary = np.setdiff1d(np.unique(nb), F)
    return Fraction(int(g.weight_units[boundary].sum()), int(g.weight_units[F].sum()))


def weighted_cheeger_restricted(graph, root: int, k: int = DEFAULT_K_MAX, cap: int = ENUMERATION_CAP, k_max: int | None = None) -> CheegerReport:
    """Minimise ``w(boundary F) / w(F)`` over connected ``F`` containing ``root``, ``|F| <= k``.

    The result bounds the true infimum from above and can only decrease as
    ``k`` grows. Missing window neighbours are not counted; when the optimal
    set touches the window rim the report is flagged ``rim_censored``. If the
    enumeration hits ``cap`` sets the report is partial (``complete=False``).
    """
    if k_max is not None and k > k_max:
        raise ValueError(f"k={k} exceeds k_max={k_max}")
    if k < 1:
        raise ValueError("k must be >= 1")
    g = _as_local(graph)
    indptr, nbr, _ = g.csr
    bb, bw, wit, counts, complete = kernels.enumerate_connected(indptr, nbr, g.weight_units, root, k, cap)
    per_size = [None] + [Fraction(int(bb[s]), int(bw[s])) if bb[s] >= 0 else None for s in range(1, k + 1)]
    best_s = min((s for s in range(1, k + 1) if per_size[s] is not None), key=lambda s: (per_size[s], s))
    witness = wit[best_s, :best_s]
    radius = safe_radius(g, root)
    prof = growth_profile(g, root, radius)
    return CheegerReport(
        root=int(g.vertex_ids[root]),
        k=k,
        phi=per_size[best_s],
        per_size=per_size,
        witness=sorted(int(g.vertex_ids[v]) for v in witness),
        n_enumerated=int(counts.sum()),
        complete=bool(complete),
        rim_censored=bool(np.any(g.rim[witness])),
        phi_ball=prof.phi_ball(),
        ball_radius=radius,
    )


# ---------------------------------------------------------------------------
# labeled metrics and annuli
# ---------------------------------------------------------------------------


def annulus_thresholds(N: int, count: int) -> list[int]:
    """``m_1 = 1``, ``m_{n+1} = N m_n + 1``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    m = [1]
    while len(m) < count:
        m.append(N * m[-1] + 1)
    return m[:count]


@dataclass
class AnnuliProfile:
    root: int
    N: int
    labels: np.ndarray
    distances: np.ndarray
    thresholds: list[int]
    annuli: list[np.ndarray]
    weights: list[Fraction]
    disjoint: bool
    sphere_contained: list[bool]

    def to_json(self) -> dict:
        return {
            "root": self.root,
            "N": self.N,
            "thresholds": self.thresholds,
            "annuli_sizes": [len(a) for a in self.annuli],
            "weights": [{"num": w.numerator, "den": w.denominator} for w in self.weights],
            "disjoint": self.disjoint,
            "sphere_contained": self.sphere_contained,
        }


def labeled_annuli(graph, labels, root: int, N: int, n_max: int | None = None) -> AnnuliProfile:
    """Annuli ``A_n = {x : m_n <= d_l(x, o) <= N m_n}`` of the labeled metric.

    Also checks that every graph sphere of radius ``m_n`` lies in ``A_n``, the
    containment that makes the annuli inherit sphere growth.
    """
    g = _as_local(graph)
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != len(g.eu):
        raise ValueError("need one label per edge")
    if len(labels) and (labels.min() < 1 or labels.max() > N):
        raise LabelOutOfRange(f"labels must lie in 1..{N}")
    indptr, nbr, eid = g.csr
    d = kernels.labeled_distances(indptr, nbr, eid, labels, root)
    hops = kernels.bfs(indptr, nbr, root)
    reach = int(d.max())
    if n_max is None:
        n_max = 0
        for m in annulus_thresholds(N, 64):
            if m > reach:
                break
            n_max += 1
    thresholds = annulus_thresholds(N, n_max) if n_max else []
    annuli, weights, contained = [], [], []
    seen = np.zeros(g.n, dtype=np.int64)
    for m in thresholds:
        members = np.flatnonzero((d >= m) & (d <= N * m))
        seen[members] += 1
        annuli.append(g.vertex_ids[members])
        weights.append(Fraction(int(g.weight_units[members].sum()), g.weight_den))
        sphere = hops == m
        contained.append(bool(np.all((d[sphere] >= m) & (d[sphere] <= N * m))))
    return AnnuliProfile(
        root=int(g.vertex_ids[root]),
        N=N,
        labels=labels,
        distances=d,
        thresholds=thresholds,
        annuli=annuli,
        weights=weights,
        disjoint=bool(np.all(seen <= 1)),
        sphere_contained=contained,
    )


def cluster_metric_labels(labeling, cluster_id: int, N: int):
    """Induced graph on a cluster with each edge labeled by its in-cluster distance, capped at ``N``.

    Returns ``(local_graph, labels)``; open edges get label 1.
    """
    win = labeling.window
    members = labeling.members(cluster_id)
    sub = win.subgraph(vertices=members)
    xs = sub.vertex_ids[sub.eu]
    ys = sub.vertex_ids[sub.ev]
    indptr, nbr, _ = labeling.open_graph.csr
    lengths, _ = kernels.geodesics(indptr, nbr, xs, ys)
    return sub, np.minimum(lengths - 1, N)
