"""Slow, obviously-correct reference implementations used by the tests."""

from collections import deque
from fractions import Fraction
from itertools import combinations


def adjacency(window, edge_mask=None):
    adj = {v: set() for v in range(window.n_vertices)}
    for e, (u, v) in enumerate(zip(window.edge_u.tolist(), window.edge_v.tolist())):
        if edge_mask is None or edge_mask[e]:
            adj[u].add(v)
            adj[v].add(u)
    return adj


def components(adj):
    seen, comps = set(), []
    for s in sorted(adj):
        if s in seen:
            continue
        comp, dq = {s}, deque([s])
        seen.add(s)
        while dq:
            x = dq.popleft()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    comp.add(y)
                    dq.append(y)
        comps.append(frozenset(comp))
    return comps


def bfs(adj, s):
    dist, dq = {s: 0}, deque([s])
    while dq:
        x = dq.popleft()
        for y in adj[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                dq.append(y)
    return dist


def vertex_weight(window, v):
    """Apex-relative weight straight from the depth formula."""
    if window.family == "unit_tree":
        return Fraction(1)
    return Fraction(1, window.q ** int(window.depth[v]))


def set_weight(window, vs):
    return sum((vertex_weight(window, v) for v in vs), Fraction(0))


def brute_cheeger(window, root, k):
    """Per-size minimum of w(dF)/w(F) over connected F containing root."""
    adj = adjacency(window)
    ball = [v for v, d in bfs(adj, root).items() if 0 < d < k]
    best = {}
    for size in range(1, k + 1):
        for rest in combinations(ball, size - 1):
            F = {root, *rest}
            if not _connected(adj, F):
                continue
            bd = {y for x in F for y in adj[x]} - F
            r = set_weight(window, bd) / set_weight(window, F)
            if size not in best or r < best[size]:
                best[size] = r
    return best


def _connected(adj, F):
    s = next(iter(F))
    seen, dq = {s}, deque([s])
    while dq:
        x = dq.popleft()
        for y in adj[x]:
            if y in F and y not in seen:
                seen.add(y)
                dq.append(y)
    return len(seen) == len(F)


def dijkstra_labels(window, labels, root):
    import heapq

    adj = {v: [] for v in range(window.n_vertices)}
    for e, (u, v) in enumerate(zip(window.edge_u.tolist(), window.edge_v.tolist())):
        adj[u].append((v, int(labels[e])))
        adj[v].append((u, int(labels[e])))
    dist = {root: 0}
    pq = [(0, root)]
    while pq:
        d, x = heapq.heappop(pq)
        if d > dist[x]:
            continue
        for y, w in adj[x]:
            if d + w < dist.get(y, 1 << 60):
                dist[y] = d + w
                heapq.heappush(pq, (d + w, y))
    return dist
