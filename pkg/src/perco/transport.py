"""Tilted mass transport checks, geodesic transport and the subsampling trial.

A transport kernel never sees vertex ids. It is evaluated on a
:class:`PairContext` holding the Gamma-invariant data of an ordered pair:
graph distance, relative depths, meet depth and (for stochastic kernels) the
state of the edge joining the pair. The identity checked at an interior root
``rho`` is::

    sum_v f(rho, v)  ==  sum_v f(v, rho) * w^rho(v)
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import kernels, rng
from .graph import GraphWindow
from .percolation import ClusterLabeling

INVARIANT_FIELDS = frozenset({"distance", "depth", "meet", "config"})


class NoInteriorVertex(ValueError):
    pass


class KernelNotInvariant(ValueError):
    pass


@dataclass(frozen=True)
class PairContext:
    distance: int
    rel_depth: int  # depth(y) - depth(x)
    meet_rel: int  # depth(meet(x, y)) - depth(x)
    edge_open: bool | None
    sphere_sizes: tuple


@dataclass(frozen=True)
class TransportScheme:
    """A transport kernel ``f(x, y)`` with support radius ``radius``.

    ``reads`` declares what the kernel looks at; anything outside
    :data:`INVARIANT_FIELDS` (e.g. ``"vertex_id"``) fails the invariance
    check. ``needs_end`` marks kernels that use the parent direction, which is
    only preserved by end-fixing automorphisms.
    """

    name: str
    radius: int
    mass: Callable[[PairContext], Fraction]
    deterministic: bool = True
    reads: frozenset = frozenset({"distance"})
    needs_end: bool = False


def _to_parent(ctx):
    return Fraction(1) if ctx.rel_depth == -1 and ctx.meet_rel == -1 else Fraction(0)


def _to_children(ctx):
    return Fraction(1) if ctx.rel_depth == 1 and ctx.meet_rel == 0 else Fraction(0)


def _to_grandparent(ctx):
    return Fraction(1) if ctx.rel_depth == -2 and ctx.meet_rel == -2 else Fraction(0)


def _open_neighbors(ctx):
    return Fraction(1) if ctx.distance == 1 and ctx.edge_open else Fraction(0)


def _sphere_uniform(r):
    def mass(ctx):
        return Fraction(1, ctx.sphere_sizes[r]) if ctx.distance == r else Fraction(0)

    return mass


def builtin_scheme(name: str) -> TransportScheme:
    """Look up a built-in kernel: ``to_parent``, ``to_children``,
    ``to_grandparent``, ``sphere_uniform:r`` or ``open_neighbors``."""
    if name == "to_parent":
        return TransportScheme(name, 1, _to_parent, reads=frozenset({"depth", "meet"}), needs_end=True)
    if name == "to_children":
        return TransportScheme(name, 1, _to_children, reads=frozenset({"depth", "meet"}), needs_end=True)
    if name == "to_grandparent":
        return TransportScheme(name, 2, _to_grandparent, reads=frozenset({"depth", "meet"}), needs_end=True)
    if name == "open_neighbors":
        return TransportScheme(name, 1, _open_neighbors, deterministic=False, reads=frozenset({"distance", "config"}))
    if name.startswith("sphere_uniform"):
        _, _, r = name.partition(":")
        r = int(r or 1)
        if r < 1:
            raise ValueError("sphere radius must be >= 1")
        return TransportScheme(f"sphere_uniform:{r}", r, _sphere_uniform(r))
    raise ValueError(f"unknown kernel {name!r}")


BUILTIN_KERNELS = ("to_parent", "to_children", "to_grandparent", "sphere_uniform:r", "open_neighbors")


def _fraction_json(x: Fraction) -> dict:
    return {"num": x.numerator, "den": x.denominator}


@dataclass
class TMTPReport:
    scheme: str
    rho: int
    deterministic: bool
    lhs: Fraction | float
    rhs: Fraction | float
    replicas: int = 0
    lhs_se: float = 0.0
    rhs_se: float = 0.0
    diff_se: float = 0.0

    @property
    def gap(self):
        return abs(self.lhs - self.rhs)

    def to_json(self) -> dict:
        out = {"scheme": self.scheme, "rho": self.rho, "deterministic": self.deterministic}
        if self.deterministic:
            out.update(lhs=_fraction_json(self.lhs), rhs=_fraction_json(self.rhs), gap=_fraction_json(self.gap))
        else:
            out.update(
                lhs_mean=float(self.lhs),
                rhs_mean=float(self.rhs),
                replicas=self.replicas,
                lhs_se=self.lhs_se,
                rhs_se=self.rhs_se,
                diff_se=self.diff_se,
            )
        return out


def interior_vertices(window: GraphWindow, radius: int):
    """Vertices farther than ``radius`` from every vertex missing from the window.

    Equivalently no rim vertex lies within ``radius - 1``, so the ``radius``-ball
    and its distances coincide with those of the infinite graph. One
    candidate per level, mid-depth levels first.
    """
    indptr, nbr, _ = window.csr
    mid = window.H / 2
    for d in sorted(range(window.H + 1), key=lambda d: (abs(d - mid), d)):
        v = window.level_offset(d)
        if _is_interior(window, v, radius):
            yield v


def _is_interior(window: GraphWindow, v: int, radius: int) -> bool:
    indptr, nbr, _ = window.csr
    dist = kernels.bfs(indptr, nbr, v, radius - 1)
    return not np.any(window.rim[dist >= 0])


def pick_interior(window: GraphWindow, radius: int) -> int:
    for v in interior_vertices(window, radius):
        return v
    raise NoInteriorVertex(f"no interior vertex for range R={radius} in a depth-{window.H} window")


def _static_check(window: GraphWindow, scheme: TransportScheme):
    extra = set(scheme.reads) - INVARIANT_FIELDS
    if extra:
        raise KernelNotInvariant(f"kernel not invariant: {scheme.name} reads {sorted(extra)}")
    if scheme.needs_end and window.family == "unit_tree":
        raise KernelNotInvariant(f"kernel not invariant: {scheme.name} uses the end direction, unit_tree has none")


def check_tmtp(window: GraphWindow, scheme: TransportScheme | str, p: float | None = None, seed: int = 0, replicas: int = 0, rho: int | None = None) -> TMTPReport:
    """Evaluate both sides of the tilted transport identity at an interior root.

    Deterministic kernels are summed exactly. Stochastic kernels are averaged
    over ``replicas`` couplings at level ``p``; standard errors of both means
    and of their paired difference are reported.
    """
    if isinstance(scheme, str):
        scheme = builtin_scheme(scheme)
    _static_check(window, scheme)
    R = scheme.radius
    if rho is None:
        rho = pick_interior(window, R)
    indptr, nbr, eid = window.csr
    dist = kernels.bfs(indptr, nbr, rho, R)
    ball = np.flatnonzero(dist >= 0)
    if not _is_interior(window, rho, R):
        raise NoInteriorVertex(f"vertex {rho} is within distance {R} of the window boundary")
    sphere_sizes = tuple(int(np.count_nonzero(dist == r)) for r in range(R + 1))

    weights = {int(v): Fraction(int(window.weight_units[v]), int(window.weight_units[rho])) for v in ball}
    edge_of = {int(nbr[j]): int(eid[j]) for j in range(indptr[rho], indptr[rho + 1])}
    d_rho = window.depth_of(rho)

    def contexts(open_edges):
        for v in ball:
            v = int(v)
            m = window.depth_of(window.meet(rho, v))
            dv = window.depth_of(v)
            e = edge_of.get(v)
            is_open = None if open_edges is None or e is None else bool(open_edges.get(e, False))
            out_ctx = PairContext(int(dist[v]), dv - d_rho, m - d_rho, is_open, sphere_sizes)
            in_ctx = PairContext(int(dist[v]), d_rho - dv, m - dv, is_open, sphere_sizes)
            yield v, out_ctx, in_ctx

    def both_sides(open_edges):
        lhs = Fraction(0)
        rhs = Fraction(0)
        for v, out_ctx, in_ctx in contexts(open_edges):
            lhs += scheme.mass(out_ctx)
            rhs += scheme.mass(in_ctx) * weights[v]
        return lhs, rhs

    if scheme.deterministic:
        lhs, rhs = both_sides(None)
        return TMTPReport(scheme.name, rho, True, lhs, rhs)

    if p is None or not 0 <= p <= 1:
        raise ValueError("stochastic kernels need p in [0, 1]")
    if replicas < 2:
        raise ValueError("stochastic kernels need at least 2 replicas")
    edges = np.array(sorted(edge_of.values()), dtype=np.uint64)
    L = np.empty(replicas)
    Rr = np.empty(replicas)
    for r in range(replicas):
        key = rng.stream_key(rng.replica_seed(seed, r), rng.EDGE)
        lab = rng.uniforms(key, edges)
        state = {int(e): bool(u < p) for e, u in zip(edges, lab)}
        lhs, rhs = both_sides(state)
        L[r], Rr[r] = float(lhs), float(rhs)
    se = lambda a: float(a.std(ddof=1) / math.sqrt(len(a)))  # noqa: E731
    return TMTPReport(scheme.name, rho, False, float(L.mean()), float(Rr.mean()), replicas, se(L), se(Rr), se(L - Rr))


# ---------------------------------------------------------------------------
# geodesic 1/k^2 transport
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GeodesicTransport:
    """Per-vertex masses as integer numerators over the common ``denominator``."""

    denominator: int
    sent_num: np.ndarray
    received_num: np.ndarray
    n_paths: np.ndarray
    depth: np.ndarray = field(repr=False)

    def sent(self, v: int) -> Fraction:
        return Fraction(int(self.sent_num[v]), self.denominator)

    def received(self, v: int) -> Fraction:
        return Fraction(int(self.received_num[v]), self.denominator)

    def total_sent(self) -> Fraction:
        return Fraction(int(sum(self.sent_num)), self.denominator)

    def total_received(self) -> Fraction:
        return Fraction(int(sum(self.received_num)), self.denominator)

    def by_depth(self) -> list[dict]:
        rows = []
        for d in range(int(self.depth.max()) + 1):
            sel = np.flatnonzero(self.depth == d)
            rows.append(
                {
                    "depth": d,
                    "sent": Fraction(int(sum(self.sent_num[sel])), self.denominator),
                    "received": Fraction(int(sum(self.received_num[sel])), self.denominator),
                }
            )
        return rows


def geodesic_transport(labeling: ClusterLabeling) -> GeodesicTransport:
    """Every vertex sends ``1/k**2`` to the k-th vertex of a geodesic to each same-cluster neighbour.

    Geodesics run inside the cluster (open edges only) and ties are broken by
    the lexicographically smallest vertex sequence. ``k`` starts at 1, so each
    path also returns mass 1 to its starting vertex.
    """
    win = labeling.window
    n = win.n_vertices
    r = labeling.root
    eu, ev = win.edge_u, win.edge_v
    same = r[eu] == r[ev]
    xs = np.concatenate([eu[same], ev[same]])
    ys = np.concatenate([ev[same], eu[same]])
    is_open = np.concatenate([labeling.open_edges[same]] * 2)

    # open edges are their own geodesic; only closed ones need a search
    cx, cy = xs[~is_open], ys[~is_open]
    indptr, nbr, _ = labeling.open_graph.csr
    lengths, flat = kernels.geodesics(indptr, nbr, cx, cy)
    if np.any(lengths < 0):
        raise RuntimeError("same-cluster pair with no open path")
    ox, oy = xs[is_open], ys[is_open]
    all_len = np.concatenate([np.full(len(ox), 2, dtype=np.int64), lengths])
    all_flat = np.concatenate([np.column_stack([ox, oy]).ravel(), flat])
    kmax = int(all_len.max()) if len(all_len) else 1
    lcm = math.lcm(*range(1, kmax + 1))
    D = lcm * lcm
    # position of every path vertex within its path
    starts = np.concatenate([[0], np.cumsum(all_len)[:-1]]) if len(all_len) else np.zeros(0, dtype=np.int64)
    k_of = np.arange(len(all_flat)) - np.repeat(starts, all_len) + 1
    received = np.zeros(n, dtype=object)
    for k in range(1, kmax + 1):
        hits = np.bincount(all_flat[k_of == k], minlength=n)
        if hits.any():
            received += hits.astype(object) * (D // (k * k))
    # sent(x) = sum over x's paths of sum_{k<=len} 1/k^2
    partial = [0]
    for k in range(1, kmax + 1):
        partial.append(partial[-1] + D // (k * k))
    sent = np.zeros(n, dtype=object)
    path_x = all_flat[starts] if len(all_len) else np.zeros(0, dtype=np.int64)
    for L in np.unique(all_len):
        sel = path_x[all_len == L]
        sent += np.bincount(sel, minlength=n).astype(object) * partial[int(L)]
    n_paths = np.bincount(path_x, minlength=n)
    return GeodesicTransport(D, sent, received, n_paths, win.depth)


# ---------------------------------------------------------------------------
# subsampling
# ---------------------------------------------------------------------------


def resolve_weights(spec, N: int) -> np.ndarray:
    """Weight sequence ``w(a_1..a_N)`` from ``"harmonic"``, ``"constant"``, ``"power:a"`` or an array."""
    n = np.arange(1, N + 1, dtype=np.float64)
    if isinstance(spec, str):
        if spec == "harmonic":
            w = 1.0 / n
        elif spec == "constant":
            w = np.ones(N)
        elif spec.startswith("power:"):
            w = n ** -float(spec.split(":", 1)[1])
        else:
            raise ValueError(f"unknown weight spec {spec!r}")
    else:
        w = np.asarray(spec, dtype=np.float64)
        if len(w) != N:
            raise ValueError("weight array length must equal N")
    if np.any(w <= 0) or np.any(w > 1):
        raise ValueError("weights must lie in (0, 1]")
    return w


@dataclass
class SubsamplingTrial:
    weights_spec: str
    c: float
    N: int
    replicas: int
    seed: int
    weight_sum: float
    expected: float
    mean: float
    tail_count: int
    tail_frequency: float
    mc_se: float
    bound: float
    chebyshev: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def subsampling_trial(weights_spec, c: float, N: int, replicas: int, seed: int) -> SubsamplingTrial:
    """Estimate ``P(W_N < E(W_N)/2)`` for ``W_N = sum Y_n w(a_n)``, ``Y_n ~ Bernoulli(c)``.

    ``bound`` is ``4(1-c)/sum w``; ``chebyshev`` is the exact
    ``4 Var(W_N)/E(W_N)**2`` it is derived from.
    """
    if not 0 < c <= 1:
        raise ValueError("c must lie in (0, 1]")
    if N < 1 or replicas < 1:
        raise ValueError("N and replicas must be positive")
    w = resolve_weights(weights_spec, N)
    total = math.fsum(w)
    expected = c * total
    sums = kernels.subsample_sums(rng.stream_key(seed, rng.SUBSAMPLE), w, c, replicas)
    tail = int(np.count_nonzero(sums < expected / 2))
    freq = tail / replicas
    var = c * (1 - c) * math.fsum(w * w)
    return SubsamplingTrial(
        weights_spec if isinstance(weights_spec, str) else "array",
        c,
        N,
        replicas,
        seed,
        total,
        expected,
        float(sums.mean()),
        tail,
        freq,
        math.sqrt(freq * (1 - freq) / replicas),
        4 * (1 - c) / total,
        4 * var / expected**2,
    )
