"""Finite windows of weighted trees-with-an-end and their weight cocycle.

A window is the descendant cone of an apex vertex, ``H`` generations deep, in
level order: the apex is vertex 0 and the children of ``v`` are
``q*v + 1, ..., q*v + q``. Parents are the heavier direction: relative to ``x``
the weight of ``y`` is ``q**(depth(x) - depth(y))``.

Three families are supported:

``tree_with_end``
    the (q+1)-regular tree, automorphisms fixing a distinguished end;
``grandparent``
    the same tree with extra edges from every vertex to its grandparent;
``unit_tree``
    the (q+1)-regular tree with its full (unimodular) automorphism group, so
    every weight is 1.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

FAMILIES = ("tree_with_end", "grandparent", "unit_tree")
FAMILY_ALIASES = {"tree": "tree_with_end", "unit-tree": "unit_tree", "gp": "grandparent"}

TREE_EDGE = 0
GRANDPARENT_EDGE = 1

DEFAULT_VERTEX_BUDGET = 1 << 23
WEIGHT_BITS = 100


class WindowTooLarge(ValueError):
    """The requested window exceeds the vertex budget or the exact-weight range."""


class OrbitTruncated(ValueError):
    """An orbit needed by the combinatorial oracle leaves the window."""


def canonical_family(name: str) -> str:
    name = FAMILY_ALIASES.get(name, name)
    if name not in FAMILIES:
        raise ValueError(f"unknown family {name!r}; expected one of {FAMILIES}")
    return name


def n_vertices_for(q: int, H: int) -> int:
    return (q ** (H + 1) - 1) // (q - 1)


@dataclass(frozen=True, eq=False)
class LocalGraph:
    """A finite graph with exact vertex weights, in CSR form.

    Weights are integers in units of ``1 / weight_den``. ``rim`` marks vertices
    whose neighbourhood in the ambient infinite graph is not fully present, so
    computations that must match the infinite graph can refuse to touch them.
    """

    eu: np.ndarray
    ev: np.ndarray
    weight_units: np.ndarray
    weight_den: int
    rim: np.ndarray
    vertex_ids: np.ndarray

    @property
    def n(self) -> int:
        return len(self.weight_units)

    @cached_property
    def csr(self):
        n = self.n
        src = np.concatenate([self.eu, self.ev])
        dst = np.concatenate([self.ev, self.eu])
        eid = np.concatenate([np.arange(len(self.eu))] * 2)
        order = np.lexsort((dst, src))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return indptr, dst[order].astype(np.int64), eid[order].astype(np.int64)

    def neighbors(self, v: int) -> np.ndarray:
        indptr, nbr, _ = self.csr
        return nbr[indptr[v]:indptr[v + 1]]

    def weight(self, vertices) -> Fraction:
        return Fraction(int(self.weight_units[np.asarray(vertices, dtype=np.int64)].sum()), self.weight_den)

    def local_index(self, window_vertex: int) -> int:
        idx = np.searchsorted(self.vertex_ids, window_vertex)
        if idx >= self.n or self.vertex_ids[idx] != window_vertex:
            raise KeyError(f"vertex {window_vertex} not in subgraph")
        return int(idx)


@dataclass(frozen=True, eq=False)
class GraphWindow:
    family: str
    q: int
    H: int
    collar: int = 0
    n_vertices: int = field(init=False)
    depth: np.ndarray = field(init=False, repr=False)
    edge_u: np.ndarray = field(init=False, repr=False)
    edge_v: np.ndarray = field(init=False, repr=False)
    edge_kind: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        q, H = self.q, self.H
        n = n_vertices_for(q, H)
        depth = np.repeat(np.arange(H + 1, dtype=np.int64), [q**d for d in range(H + 1)])
        v = np.arange(1, n, dtype=np.int64)
        us = [(v - 1) // q]
        vs = [v]
        kinds = [np.full(n - 1, TREE_EDGE, dtype=np.int8)]
        if self.family == "grandparent":
            g = v[depth[1:] >= 2]
            us.append(((g - 1) // q - 1) // q)
            vs.append(g)
            kinds.append(np.full(len(g), GRANDPARENT_EDGE, dtype=np.int8))
        eu, ev, kind = np.concatenate(us), np.concatenate(vs), np.concatenate(kinds)
        order = np.lexsort((kind, ev, eu))
        for name, value in (
            ("n_vertices", n),
            ("depth", depth),
            ("edge_u", eu[order]),
            ("edge_v", ev[order]),
            ("edge_kind", kind[order]),
        ):
            if isinstance(value, np.ndarray):
                value.flags.writeable = False
            object.__setattr__(self, name, value)

    # -- sizes ---------------------------------------------------------------

    @property
    def n_edges(self) -> int:
        return len(self.edge_u)

    @property
    def weight_den(self) -> int:
        """Weights are stored in units of ``q**-H`` relative to the apex."""
        return 1 if self.family == "unit_tree" else self.q**self.H

    @property
    def full_degree(self) -> int:
        """Degree of every vertex in the infinite graph."""
        q = self.q
        return q * q + q + 2 if self.family == "grandparent" else q + 1

    def descriptor(self) -> dict:
        return {
            "family": self.family,
            "q": self.q,
            "H": self.H,
            "collar": self.collar,
            "n_vertices": self.n_vertices,
            "n_edges": self.n_edges,
        }

    # -- level-order arithmetic ---------------------------------------------

    def level_offset(self, d: int) -> int:
        return (self.q**d - 1) // (self.q - 1)

    def depth_of(self, v: int) -> int:
        return int(self.depth[v])

    def parent(self, v: int) -> int:
        if v == 0:
            raise ValueError("the apex has no parent inside the window")
        return (v - 1) // self.q

    def child(self, v: int, j: int) -> int:
        if not 0 <= j < self.q:
            raise ValueError("child index out of range")
        return self.q * v + 1 + j

    def children(self, v: int) -> list[int]:
        if self.depth[v] >= self.H:
            return []
        return [self.q * v + 1 + j for j in range(self.q)]

    def ancestor(self, v: int, depth: int) -> int:
        """Ancestor of ``v`` at the given depth (``v`` itself at its own depth)."""
        d = int(self.depth[v])
        if not 0 <= depth <= d:
            raise ValueError("ancestor depth out of range")
        pos = (v - self.level_offset(d)) // self.q ** (d - depth)
        return self.level_offset(depth) + pos

    def meet(self, x: int, y: int) -> int:
        """Nearest common ancestor in the underlying tree."""
        dx, dy = int(self.depth[x]), int(self.depth[y])
        d = min(dx, dy)
        x, y = self.ancestor(x, d), self.ancestor(y, d)
        while x != y:
            x, y = (x - 1) // self.q, (y - 1) // self.q
        return x

    def tree_distance(self, x: int, y: int) -> int:
        m = int(self.depth[self.meet(x, y)])
        return int(self.depth[x]) + int(self.depth[y]) - 2 * m

    @cached_property
    def _orbit_cache(self) -> dict:
        return {}

    # -- weights -------------------------------------------------------------

    @cached_property
    def weight_units(self) -> np.ndarray:
        """Apex-relative weight of every vertex in units of ``q**-H``."""
        if self.family == "unit_tree":
            w = np.ones(self.n_vertices, dtype=np.int64)
        else:
            per_level = np.array([self.q ** (self.H - d) for d in range(self.H + 1)], dtype=np.int64)
            w = per_level[self.depth]
        w.flags.writeable = False
        return w

    def weight(self, vertices) -> Fraction:
        """Exact apex-relative weight of a vertex set."""
        idx = np.asarray(list(vertices) if isinstance(vertices, (set, frozenset)) else vertices, dtype=np.int64)
        return Fraction(int(self.weight_units[idx].sum()), self.weight_den)

    # -- adjacency -----------------------------------------------------------

    @cached_property
    def rim(self) -> np.ndarray:
        """Vertices with at least one infinite-graph neighbour outside the window."""
        reach = 2 if self.family == "grandparent" else 1
        r = (self.depth < reach) | (self.depth > self.H - reach)
        r.flags.writeable = False
        return r

    @cached_property
    def graph(self) -> LocalGraph:
        return self.subgraph()

    @cached_property
    def csr(self):
        return self.graph.csr

    def neighbors(self, v: int) -> np.ndarray:
        indptr, nbr, _ = self.csr
        return nbr[indptr[v]:indptr[v + 1]]

    def subgraph(self, edge_mask=None, vertices=None) -> LocalGraph:
        """Window graph restricted to ``edge_mask`` and/or a vertex subset.

        With ``vertices`` given, the result is re-indexed to ``0..len-1`` in
        increasing window order; ``LocalGraph.vertex_ids`` maps back.
        """
        eu, ev = self.edge_u, self.edge_v
        if edge_mask is not None:
            eu, ev = eu[edge_mask], ev[edge_mask]
        if vertices is None:
            ids = np.arange(self.n_vertices, dtype=np.int64)
            return LocalGraph(eu.copy(), ev.copy(), self.weight_units, self.weight_den, self.rim, ids)
        ids = np.unique(np.asarray(vertices, dtype=np.int64))
        keep = np.isin(eu, ids) & np.isin(ev, ids)
        lu = np.searchsorted(ids, eu[keep])
        lv = np.searchsorted(ids, ev[keep])
        return LocalGraph(lu, lv, self.weight_units[ids], self.weight_den, self.rim[ids], ids)


def build_window(family: str, q: int, H: int, collar: int = 0, vertex_budget: int = DEFAULT_VERTEX_BUDGET) -> GraphWindow:
    """Build the depth-``H`` descendant cone of the given family.

    Raises
    ------
    ValueError
        for out-of-range parameters.
    WindowTooLarge
        if the vertex count exceeds ``vertex_budget`` or the exact weight
        accounting would need more than 100 bits.
    """
    family = canonical_family(family)
    if q < 2:
        raise ValueError("q must be >= 2")
    if H < 1:
        raise ValueError("H must be >= 1")
    if not 0 <= collar < H:
        raise ValueError("collar must satisfy 0 <= collar < H")
    n = n_vertices_for(q, H)
    if n > vertex_budget:
        raise WindowTooLarge(f"window too large: {n} vertices exceeds budget {vertex_budget}")
    if (H + 1) * q**H > 2**WEIGHT_BITS:
        raise WindowTooLarge("window too large: exact weights exceed 100 bits")
    return GraphWindow(family, q, H, collar)


def cocycle(window: GraphWindow, x: int, y: int) -> Fraction:
    """Relative weight of ``y`` seen from ``x``: ``q**(depth(x) - depth(y))``."""
    _check_vertex(window, x)
    _check_vertex(window, y)
    if window.family == "unit_tree":
        return Fraction(1)
    return Fraction(window.q) ** (int(window.depth[x]) - int(window.depth[y]))


def cocycle_exponent(window: GraphWindow, x: int, y: int) -> int:
    if window.family == "unit_tree":
        return 0
    return int(window.depth[x]) - int(window.depth[y])


def _check_vertex(window: GraphWindow, v: int):
    if not 0 <= v < window.n_vertices:
        raise ValueError(f"vertex {v} not in window")


def _meet_depths(window: GraphWindow, x: int, level: int) -> np.ndarray:
    """Depth of meet(x, z) for every z on the given level (vectorised)."""
    q = window.q
    pos = np.arange(q**level, dtype=np.int64)
    dx = int(window.depth[x])
    xpos = x - window.level_offset(dx)
    out = np.full(len(pos), -1, dtype=np.int64)
    for t in range(min(dx, level) + 1):
        same = (pos // q ** (level - t)) == (xpos // q ** (dx - t))
        out[same] = t
    return out


def _stabilizer_orbit_size(window: GraphWindow, x: int, y: int) -> int:
    """|Gamma_x y| by enumeration over the window."""
    cache = window._orbit_cache
    key = (x, y)
    if key not in cache:
        cache[key] = _count_orbit(window, x, y)
    return cache[key]


def _count_orbit(window: GraphWindow, x: int, y: int) -> int:
    if window.family == "unit_tree":
        # full automorphism group: the Gamma_x orbit of y is the sphere around x
        if np.any(window.rim[_ball_vertices(window, x, window.tree_distance(x, y) - 1)]):
            raise OrbitTruncated("orbit truncated by window")
        dist = window.tree_distance(x, y)
        zs = np.arange(window.n_vertices)
        return int(sum(1 for z in zs if window.tree_distance(x, int(z)) == dist))
    dy = int(window.depth[y])
    target = int(window.depth[window.meet(x, y)])
    if target < 0:
        raise OrbitTruncated("orbit truncated by window")
    key = ("meet", x, dy)
    cache = window._orbit_cache
    if key not in cache:
        cache[key] = np.bincount(_meet_depths(window, x, dy) + 1)
    counts = cache[key]
    return int(counts[target + 1]) if target + 1 < len(counts) else 0


def _ball_vertices(window: GraphWindow, x: int, r: int) -> np.ndarray:
    if r < 0:
        return np.zeros(0, dtype=np.int64)
    return np.array([z for z in range(window.n_vertices) if window.tree_distance(x, z) <= r], dtype=np.int64)


def orbit_count_ratio(window: GraphWindow, x: int, y: int) -> Fraction:
    """``|Gamma_y x| / |Gamma_x y|`` counted vertex by vertex.

    Under the end-fixing group, ``z`` is in the ``Gamma_x``-orbit of ``y`` exactly
    when it sits on the level of ``y`` and its meet with ``x`` is as deep as the
    meet of ``x`` and ``y``. This is computed from the window without using
    depth differences, so it independently checks :func:`cocycle`.
    """
    _check_vertex(window, x)
    _check_vertex(window, y)
    return Fraction(_stabilizer_orbit_size(window, y, x), _stabilizer_orbit_size(window, x, y))
